#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "cabb/geometry.hpp"
#include "cabb/random.hpp"

namespace cabb {

struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ImageInfo {
    int id = 0;
    double width = 0.0;
    double height = 0.0;
};

struct Instance {
    int id = 0;
    int image_id = 0;
    int class_id = 0;
    std::array<double, 4> bbox{0, 0, 0, 0};  // x, y, w, h
    double area = 0.0;

    double scale() const { return std::sqrt(bbox[2] * bbox[3]); }
    Box box() const {
        return Box{{bbox[0] + bbox[2] / 2, bbox[1] + bbox[3] / 2}, {bbox[2], bbox[3]}};
    }
};

struct ClassInfo {
    int id = 0;
    std::string name;
    bool is_thing = false;
};

/// Minimal interoperable annotation carrier: images / annotations /
/// categories arrays, bbox as x,y,w,h in pixels.
struct AnnotationSet {
    std::vector<ImageInfo> images;
    std::vector<Instance> instances;
    std::vector<ClassInfo> classes;

    void validate() const;
};

inline void AnnotationSet::validate() const {
    std::map<int, const ImageInfo*> img;
    for (const auto& im : images) {
        if (!img.emplace(im.id, &im).second)
            throw DataError("duplicate image id " + std::to_string(im.id));
        if (!(im.width > 0) || !(im.height > 0))
            throw DataError("image " + std::to_string(im.id) + " has non-positive size");
    }
    std::map<int, const ClassInfo*> cls;
    for (const auto& c : classes)
        if (!cls.emplace(c.id, &c).second)
            throw DataError("duplicate class id " + std::to_string(c.id));
    std::map<int, bool> inst_ids;
    for (const auto& a : instances) {
        if (!inst_ids.emplace(a.id, true).second)
            throw DataError("duplicate instance id " + std::to_string(a.id));
        auto it = img.find(a.image_id);
        if (it == img.end())
            throw DataError("instance " + std::to_string(a.id) + " references missing image " +
                            std::to_string(a.image_id));
        if (cls.find(a.class_id) == cls.end())
            throw DataError("instance " + std::to_string(a.id) + " references missing class " +
                            std::to_string(a.class_id));
        const double tol = 1e-6;
        if (a.bbox[2] <= 0 || a.bbox[3] <= 0 || a.bbox[0] < -tol || a.bbox[1] < -tol ||
            a.bbox[0] + a.bbox[2] > it->second->width + tol ||
            a.bbox[1] + a.bbox[3] > it->second->height + tol)
            throw DataError("instance " + std::to_string(a.id) + " bbox outside image bounds");
        if (!(a.area > 0)) throw DataError("instance " + std::to_string(a.id) + " area <= 0");
    }
}

inline AnnotationSet annotations_from_json(const nlohmann::json& j) {
    AnnotationSet set;
    try {
        for (const auto& im : j.at("images"))
            set.images.push_back({im.at("id").get<int>(), im.at("width").get<double>(),
                                  im.at("height").get<double>()});
        for (const auto& a : j.at("annotations")) {
            Instance inst;
            inst.id = a.at("id").get<int>();
            inst.image_id = a.at("image_id").get<int>();
            inst.class_id = a.at("category_id").get<int>();
            const auto& bb = a.at("bbox");
            for (int k = 0; k < 4; ++k) inst.bbox[k] = bb.at(k).get<double>();
            inst.area = a.contains("area") ? a.at("area").get<double>()
                                           : inst.bbox[2] * inst.bbox[3];
            set.instances.push_back(inst);
        }
        for (const auto& c : j.at("categories"))
            set.classes.push_back({c.at("id").get<int>(), c.value("name", std::string{}),
                                   c.value("isthing", 0) != 0});
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("annotation parse failure: ") + e.what());
    }
    set.validate();
    return set;
}

inline nlohmann::json annotations_to_json(const AnnotationSet& set) {
    nlohmann::json j;
    j["images"] = nlohmann::json::array();
    for (const auto& im : set.images)
        j["images"].push_back({{"id", im.id}, {"width", im.width}, {"height", im.height}});
    j["annotations"] = nlohmann::json::array();
    for (const auto& a : set.instances)
        j["annotations"].push_back({{"id", a.id},
                                    {"image_id", a.image_id},
                                    {"category_id", a.class_id},
                                    {"bbox", a.bbox},
                                    {"area", a.area}});
    j["categories"] = nlohmann::json::array();
    for (const auto& c : set.classes)
        j["categories"].push_back(
            {{"id", c.id}, {"name", c.name}, {"isthing", c.is_thing ? 1 : 0}});
    return j;
}

inline AnnotationSet load_annotations(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw DataError("cannot open annotation file: " + path);
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("annotation parse failure: ") + e.what());
    }
    return annotations_from_json(j);
}

inline void save_annotations(const AnnotationSet& set, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw DataError("cannot open output file: " + path);
    f << annotations_to_json(set).dump(2) << '\n';
}

struct SynthSpec {
    int n_images = 20;
    int n_classes_thing = 5;
    int n_classes_stuff = 3;
    int n_instances = 1000;
    double scale_median = 48.0;   // log-normal median of sqrt(bbox area)
    double scale_log_sigma = 1.0; // sigma of log(scale); heavy on small objects
    double image_width = 4000.0;
    double image_height = 3000.0;
    std::uint64_t seed = 1;
};

/// Deterministic synthetic dataset; desk-scale stand-in for a real one.
inline AnnotationSet synth_dataset(const SynthSpec& spec) {
    if (spec.n_images < 1 || spec.n_classes_thing + spec.n_classes_stuff < 1 ||
        spec.n_instances < 0)
        throw std::invalid_argument("synth_dataset: counts must be positive");
    Rng rng(spec.seed);
    AnnotationSet set;
    for (int i = 0; i < spec.n_images; ++i)
        set.images.push_back({i + 1, spec.image_width, spec.image_height});
    int cid = 1;
    for (int i = 0; i < spec.n_classes_thing; ++i, ++cid)
        set.classes.push_back({cid, "thing_" + std::to_string(i), true});
    for (int i = 0; i < spec.n_classes_stuff; ++i, ++cid)
        set.classes.push_back({cid, "stuff_" + std::to_string(i), false});

    const double max_scale = 0.95 * std::min(spec.image_width, spec.image_height);
    for (int i = 0; i < spec.n_instances; ++i) {
        Instance inst;
        inst.id = i + 1;
        inst.image_id = 1 + static_cast<int>(uniform_int(rng, 0, spec.n_images - 1));
        inst.class_id =
            1 + static_cast<int>(uniform_int(rng, 0, static_cast<int>(set.classes.size()) - 1));
        double s = spec.scale_median * std::exp(normal(rng, 0.0, spec.scale_log_sigma));
        s = std::min(std::max(s, 2.0), max_scale);
        const double ar = std::sqrt(uniform_real(rng, 0.75, 1.3333333333333333));
        double w = std::min(s * ar, 0.99 * spec.image_width);
        double h = std::min(s / ar, 0.99 * spec.image_height);
        inst.bbox[0] = uniform_real(rng, 0.0, spec.image_width - w);
        inst.bbox[1] = uniform_real(rng, 0.0, spec.image_height - h);
        inst.bbox[2] = w;
        inst.bbox[3] = h;
        inst.area = w * h;
        set.instances.push_back(inst);
    }
    set.validate();
    return set;
}

struct ScaleHistogram {
    std::vector<double> bin_edges;
    std::vector<std::int64_t> counts;
    std::int64_t ignored = 0;  // instances falling outside [first, last) edge
};

inline ScaleHistogram scale_histogram(const AnnotationSet& set,
                                      const std::vector<double>& bin_edges) {
    if (bin_edges.size() < 2) throw std::invalid_argument("scale_histogram: need >= 2 edges");
    for (std::size_t i = 1; i < bin_edges.size(); ++i)
        if (!(bin_edges[i] > bin_edges[i - 1]))
            throw std::invalid_argument("scale_histogram: edges must be strictly increasing");
    ScaleHistogram h;
    h.bin_edges = bin_edges;
    h.counts.assign(bin_edges.size() - 1, 0);
    for (const auto& inst : set.instances) {
        const double s = inst.scale();
        if (s < bin_edges.front() || s >= bin_edges.back()) {
            ++h.ignored;
            continue;
        }
        const auto it = std::upper_bound(bin_edges.begin(), bin_edges.end(), s);
        ++h.counts[static_cast<std::size_t>(it - bin_edges.begin()) - 1];
    }
    return h;
}

} // namespace cabb
