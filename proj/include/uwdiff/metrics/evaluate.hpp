#ifndef UWDIFF_METRICS_EVALUATE_HPP_
#define UWDIFF_METRICS_EVALUATE_HPP_

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "uwdiff/core/image.hpp"
#include "uwdiff/metrics/ciede2000.hpp"
#include "uwdiff/metrics/cpbd.hpp"
#include "uwdiff/metrics/psnr.hpp"
#include "uwdiff/metrics/ssim.hpp"
#include "uwdiff/metrics/uciqe.hpp"
#include "uwdiff/metrics/uiqm.hpp"

namespace uwdiff {

struct MetricsRow {
    std::string id;
    double psnr = std::numeric_limits<double>::quiet_NaN();
    double ssim = std::numeric_limits<double>::quiet_NaN();
    double uiqm = 0.0;
    double uciqe = 0.0;
    double cpbd = 0.0;
    double ciede2000 = std::numeric_limits<double>::quiet_NaN();
    bool cpbd_no_edges = false;
};

// Full-reference columns stay NaN when no reference is available; the
// no-reference columns are always filled. Metrics whose windows do not fit
// the image (cpbd below 64x64, ssim below 11x11) also report NaN.
inline MetricsRow evaluate_image(const std::string& id, const Image& enhanced,
                                 const Image* reference) {
    MetricsRow row;
    row.id = id;
    row.uiqm = uiqm(enhanced);
    row.uciqe = uciqe(enhanced);
    if (enhanced.height() >= 64 && enhanced.width() >= 64) {
        const CpbdResult c = cpbd(enhanced);
        row.cpbd = c.value;
        row.cpbd_no_edges = c.no_edges;
    } else {
        row.cpbd = std::numeric_limits<double>::quiet_NaN();
    }
    if (reference != nullptr) {
        row.psnr = psnr(enhanced, *reference);
        row.ssim = (enhanced.height() >= 11 && enhanced.width() >= 11)
                       ? ssim(enhanced, *reference)
                       : std::numeric_limits<double>::quiet_NaN();
        row.ciede2000 = mean_ciede2000(enhanced, *reference);
    }
    return row;
}

// Column-wise mean over rows, ignoring NaN entries per column.
inline MetricsRow mean_metrics(const std::vector<MetricsRow>& rows) {
    MetricsRow mean;
    mean.id = "MEAN";
    auto fold = [&](auto getter, double& out) {
        double s = 0.0;
        int64_t k = 0;
        for (const MetricsRow& r : rows) {
            const double v = getter(r);
            if (!std::isnan(v)) {
                s += v;
                ++k;
            }
        }
        out = k > 0 ? s / static_cast<double>(k) : std::numeric_limits<double>::quiet_NaN();
    };
    fold([](const MetricsRow& r) { return r.psnr; }, mean.psnr);
    fold([](const MetricsRow& r) { return r.ssim; }, mean.ssim);
    fold([](const MetricsRow& r) { return r.uiqm; }, mean.uiqm);
    fold([](const MetricsRow& r) { return r.uciqe; }, mean.uciqe);
    fold([](const MetricsRow& r) { return r.cpbd; }, mean.cpbd);
    fold([](const MetricsRow& r) { return r.ciede2000; }, mean.ciede2000);
    return mean;
}

inline std::string metrics_csv(const std::vector<MetricsRow>& rows, bool append_mean = true) {
    std::string out = "id,psnr,ssim,uiqm,uciqe,cpbd,ciede2000\n";
    auto emit = [&](const MetricsRow& r) {
        char buf[256];
        std::snprintf(buf, sizeof(buf), "%s,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g\n", r.id.c_str(),
                      r.psnr, r.ssim, r.uiqm, r.uciqe, r.cpbd, r.ciede2000);
        out += buf;
    };
    for (const MetricsRow& r : rows) emit(r);
    if (append_mean && !rows.empty()) emit(mean_metrics(rows));
    return out;
}

inline void write_metrics_csv(const std::string& path, const std::vector<MetricsRow>& rows,
                              bool append_mean = true) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path);
    f << metrics_csv(rows, append_mean);
}

}  // namespace uwdiff

#endif  // UWDIFF_METRICS_EVALUATE_HPP_
