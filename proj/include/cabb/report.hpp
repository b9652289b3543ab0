#pragma once

#include <cstdio>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "cabb/annotations.hpp"
#include "cabb/sampler.hpp"

namespace cabb {

// CSV emitters: header row, comma separator, '.' decimal point. Formatting
// goes through snprintf so outputs are byte-stable for a fixed seed.

inline std::string fmt_num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

inline void write_decisions_csv(std::ostream& os, const std::vector<SampleDecision>& decisions) {
    os << "draw,class_id,image_id,instance_id,target_level,sigma,clamped,"
          "crop_x,crop_y,crop_w,crop_h\n";
    for (std::size_t i = 0; i < decisions.size(); ++i) {
        const auto& d = decisions[i];
        os << i << ',' << d.class_id << ',' << d.image_id << ',';
        if (d.instance_id) os << *d.instance_id;
        os << ',';
        if (d.target_level) os << *d.target_level;
        os << ',' << fmt_num(d.sigma) << ',' << (d.clamped ? 1 : 0) << ','
           << fmt_num(d.crop_rect.origin[0]) << ',' << fmt_num(d.crop_rect.origin[1]) << ','
           << fmt_num(d.crop_rect.extent[0]) << ',' << fmt_num(d.crop_rect.extent[1]) << '\n';
    }
}

inline void write_levels_csv(std::ostream& os, const std::map<int, std::int64_t>& hist) {
    os << "level,count\n";
    for (const auto& [lvl, c] : hist) os << lvl << ',' << c << '\n';
}

inline void write_crop_iou_csv(std::ostream& os, const std::vector<CropIouRow>& rows) {
    os << "bucket_lo,bucket_hi,count,mean_iou\n";
    for (const auto& r : rows)
        os << fmt_num(r.bucket_lo) << ',' << fmt_num(r.bucket_hi) << ',' << r.count << ','
           << fmt_num(r.mean_iou) << '\n';
}

inline void write_scales_csv(std::ostream& os, const ScaleHistogram& h) {
    os << "bin_lo,bin_hi,count\n";
    for (std::size_t i = 0; i + 1 < h.bin_edges.size(); ++i)
        os << fmt_num(h.bin_edges[i]) << ',' << fmt_num(h.bin_edges[i + 1]) << ',' << h.counts[i]
           << '\n';
}

} // namespace cabb
