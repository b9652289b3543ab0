#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

#include "cabb/annotations.hpp"
#include "cabb/geometry.hpp"
#include "cabb/random.hpp"

namespace cabb {

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
};

struct PyramidSpec {
    int level_min = 2;
    int level_max = 6;
    int k0 = 4;
    double canonical_scale = 224.0;
};

struct SamplerConfig {
    double s0 = 2400.0;            // shortest-side resize target
    Interval r_th{0.25, 4.0};      // thing scale-factor clamp range
    Interval r_st{0.8, 1.25};      // stuff uniform scale range
    Vec2 crop{1024.0, 1024.0};
    std::uint64_t seed = 1;
};

enum class SampleMode { CUS, ISUS };

/// Feature-pyramid level assignment, scale = sqrt(box area).
inline int level_for(double scale, const PyramidSpec& spec) {
    if (!(scale > 0.0)) throw std::invalid_argument("level_for: scale must be positive");
    const int l = spec.k0 +
                  static_cast<int>(std::floor(std::log2(scale / spec.canonical_scale)));
    return std::clamp(l, spec.level_min, spec.level_max);
}

/// Scale factor placing an instance at the target pyramid level: the target
/// scale is drawn log-uniformly within the level's band, then the factor is
/// clamped to r_th. Unclamped factors always hit the target level exactly.
inline double sigma_for_instance(double instance_scale, int target_level,
                                 const PyramidSpec& spec, const Interval& r_th, Rng& rng) {
    if (!(instance_scale > 0.0))
        throw std::invalid_argument("sigma_for_instance: scale must be positive");
    const double band_lo = spec.canonical_scale * std::exp2(target_level - spec.k0);
    const double target = log_uniform(rng, band_lo, 2.0 * band_lo);
    const double sigma = target / instance_scale;
    return std::clamp(sigma, r_th.lo, r_th.hi);
}

/// One sampler draw. instance_id / target_level are present only for ISUS
/// thing draws; crop_rect lives in scaled-image coordinates.
struct SampleDecision {
    int class_id = 0;
    int image_id = 0;
    std::optional<int> instance_id;   // the instance driving the histogram (thing draws)
    std::optional<int> target_level;  // ISUS thing draws only
    double sigma = 1.0;
    bool clamped = false;  // sigma hit an r_th bound
    CropRect crop_rect;
    double scaled_width = 0.0;
    double scaled_height = 0.0;
};

/// Simulates the CUS / ISUS data-preparation pipeline over annotation
/// metadata. Pure geometry: no pixel data involved.
class Sampler {
public:
    Sampler(const AnnotationSet& set, SamplerConfig cfg, PyramidSpec spec)
        : set_(&set), cfg_(cfg), spec_(spec) {
        for (std::size_t i = 0; i < set.instances.size(); ++i) {
            const auto& inst = set.instances[i];
            by_class_image_[{inst.class_id, inst.image_id}].push_back(i);
            instance_by_id_[inst.id] = i;
        }
        for (std::size_t ci = 0; ci < set.classes.size(); ++ci) {
            const auto& c = set.classes[ci];
            auto& imgs = class_images_[c.id];
            for (const auto& [key, v] : by_class_image_)
                if (key.first == c.id) imgs.push_back(key.second);
            if (imgs.empty())
                throw DataError("class '" + c.name + "' (id " + std::to_string(c.id) +
                                ") has no containing image");
        }
        for (const auto& im : set.images) images_[im.id] = &im;
    }

    SampleDecision draw(SampleMode mode, Rng& rng) const {
        SampleDecision dec;
        const auto& cls =
            set_->classes[static_cast<std::size_t>(uniform_int(rng, 0, n_classes() - 1))];
        dec.class_id = cls.id;
        const auto& imgs = class_images_.at(cls.id);
        dec.image_id = imgs[static_cast<std::size_t>(
            uniform_int(rng, 0, static_cast<std::int64_t>(imgs.size()) - 1))];
        const ImageInfo& im = *images_.at(dec.image_id);
        const double base = cfg_.s0 / std::min(im.width, im.height);

        const auto& members = by_class_image_.at({cls.id, dec.image_id});
        const auto& inst = set_->instances[members[static_cast<std::size_t>(
            uniform_int(rng, 0, static_cast<std::int64_t>(members.size()) - 1))]];
        if (cls.is_thing) dec.instance_id = inst.id;

        if (mode == SampleMode::ISUS && cls.is_thing) {
            dec.target_level =
                static_cast<int>(uniform_int(rng, spec_.level_min, spec_.level_max));
            const double s_resized = inst.scale() * base;
            dec.sigma =
                sigma_for_instance(s_resized, *dec.target_level, spec_, cfg_.r_th, rng);
            dec.clamped = dec.sigma == cfg_.r_th.lo || dec.sigma == cfg_.r_th.hi;
        } else {
            dec.sigma = uniform_real(rng, cfg_.r_st.lo, cfg_.r_st.hi);
        }

        const double total = base * dec.sigma;
        dec.scaled_width = im.width * total;
        dec.scaled_height = im.height * total;
        const double cw = std::min(cfg_.crop[0], dec.scaled_width);
        const double ch = std::min(cfg_.crop[1], dec.scaled_height);
        // Center the crop on a point inside the selected record's scaled box,
        // then clamp to the image.
        const double px = (inst.bbox[0] + uniform_unit(rng) * inst.bbox[2]) * total;
        const double py = (inst.bbox[1] + uniform_unit(rng) * inst.bbox[3]) * total;
        dec.crop_rect.origin[0] = std::clamp(px - cw / 2, 0.0, dec.scaled_width - cw);
        dec.crop_rect.origin[1] = std::clamp(py - ch / 2, 0.0, dec.scaled_height - ch);
        dec.crop_rect.extent = {cw, ch};
        return dec;
    }

    /// Pyramid level of the decision's selected instance after scaling and
    /// cropping; absent for stuff draws.
    std::optional<int> assigned_level(const SampleDecision& dec) const {
        if (!dec.instance_id) return std::nullopt;
        const Instance& inst = *find_instance(*dec.instance_id);
        const ImageInfo& im = *images_.at(dec.image_id);
        const double total = cfg_.s0 / std::min(im.width, im.height) * dec.sigma;
        Box scaled{{(inst.bbox[0] + inst.bbox[2] / 2) * total,
                    (inst.bbox[1] + inst.bbox[3] / 2) * total},
                   {inst.bbox[2] * total, inst.bbox[3] * total}};
        auto cropped = crop_box(scaled, dec.crop_rect);
        if (!cropped) return std::nullopt;  // cannot happen: crop centered in the box
        return level_for(std::sqrt(cropped->area()), spec_);
    }

    std::map<int, std::int64_t> level_histogram(SampleMode mode, std::int64_t n_draws,
                                                Rng& rng) const {
        if (n_draws < 1) throw std::invalid_argument("level_histogram: n_draws >= 1");
        std::map<int, std::int64_t> hist;
        for (std::int64_t i = 0; i < n_draws; ++i) {
            const SampleDecision dec = draw(mode, rng);
            if (auto lvl = assigned_level(dec)) ++hist[*lvl];
        }
        return hist;
    }

    const AnnotationSet& set() const { return *set_; }
    const SamplerConfig& config() const { return cfg_; }
    const PyramidSpec& pyramid() const { return spec_; }

    const Instance* find_instance(int id) const {
        auto it = instance_by_id_.find(id);
        if (it == instance_by_id_.end())
            throw DataError("unknown instance id " + std::to_string(id));
        return &set_->instances[it->second];
    }

private:
    std::int64_t n_classes() const { return static_cast<std::int64_t>(set_->classes.size()); }

    const AnnotationSet* set_;
    SamplerConfig cfg_;
    PyramidSpec spec_;
    std::map<std::pair<int, int>, std::vector<std::size_t>> by_class_image_;
    std::map<int, std::size_t> instance_by_id_;
    std::map<int, std::vector<int>> class_images_;
    std::map<int, const ImageInfo*> images_;
};

inline SampleDecision draw_sample(const AnnotationSet& set, const SamplerConfig& cfg,
                                  const PyramidSpec& spec, SampleMode mode, Rng& rng) {
    return Sampler(set, cfg, spec).draw(mode, rng);
}

struct CropIouRow {
    double bucket_lo = 0.0;
    double bucket_hi = 0.0;
    std::int64_t count = 0;
    double mean_iou = 0.0;
};

/// Fig-style statistic: mean IoU of cropped vs original (scaled) boxes,
/// bucketed by the original scaled object scale. Empty buckets are omitted.
inline std::vector<CropIouRow> crop_iou_by_size(const AnnotationSet& set,
                                                const SamplerConfig& cfg,
                                                const PyramidSpec& spec, SampleMode mode,
                                                std::int64_t n_draws,
                                                const std::vector<double>& size_bin_edges,
                                                Rng& rng) {
    if (n_draws < 1) throw std::invalid_argument("crop_iou_by_size: n_draws >= 1");
    if (size_bin_edges.size() < 2)
        throw std::invalid_argument("crop_iou_by_size: need >= 2 edges");
    Sampler sampler(set, cfg, spec);
    std::vector<std::int64_t> counts(size_bin_edges.size() - 1, 0);
    std::vector<double> sums(size_bin_edges.size() - 1, 0.0);

    std::map<int, std::vector<const Instance*>> by_image;
    for (const auto& inst : set.instances) by_image[inst.image_id].push_back(&inst);
    std::map<int, const ImageInfo*> images;
    for (const auto& im : set.images) images[im.id] = &im;

    for (std::int64_t i = 0; i < n_draws; ++i) {
        const SampleDecision dec = sampler.draw(mode, rng);
        const ImageInfo& im = *images.at(dec.image_id);
        const double total = cfg.s0 / std::min(im.width, im.height) * dec.sigma;
        for (const Instance* inst : by_image.at(dec.image_id)) {
            Box scaled{{(inst->bbox[0] + inst->bbox[2] / 2) * total,
                        (inst->bbox[1] + inst->bbox[3] / 2) * total},
                       {inst->bbox[2] * total, inst->bbox[3] * total}};
            auto cropped = crop_box(scaled, dec.crop_rect);
            if (!cropped) continue;
            const double s = std::sqrt(scaled.area());
            if (s < size_bin_edges.front() || s >= size_bin_edges.back()) continue;
            const auto it =
                std::upper_bound(size_bin_edges.begin(), size_bin_edges.end(), s);
            const auto b = static_cast<std::size_t>(it - size_bin_edges.begin()) - 1;
            ++counts[b];
            sums[b] += iou(*cropped, scaled);
        }
    }
    std::vector<CropIouRow> rows;
    for (std::size_t b = 0; b < counts.size(); ++b)
        if (counts[b] > 0)
            rows.push_back({size_bin_edges[b], size_bin_edges[b + 1], counts[b],
                            sums[b] / static_cast<double>(counts[b])});
    return rows;
}

} // namespace cabb
