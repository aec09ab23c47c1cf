#include "patchtrack/bench.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "patchtrack/error.hpp"

namespace fs = std::filesystem;

namespace patchtrack {

double overlap_score(const Box& a, const Box& b) {
    const double iw = std::max(0.0, std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x));
    const double ih = std::max(0.0, std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y));
    const double inter = iw * ih;
    const double uni = a.area() + b.area() - inter;
    // (x + w) - x can round above w, so identical boxes could exceed 1.
    return uni > 0.0 ? std::min(1.0, inter / uni) : 0.0;
}

double center_error(const Box& a, const Box& b) {
    return std::hypot(a.cx() - b.cx(), a.cy() - b.cy());
}

MetricCurves compute_curves(const std::vector<Box>& track, const std::vector<Box>& gt) {
    if (track.size() != gt.size())
        throw DimensionError("track has " + std::to_string(track.size()) + " boxes, ground truth " +
                             std::to_string(gt.size()));
    MetricCurves c;
    for (int t = 0; t <= 50; ++t) c.precision_thresholds.push_back(t);
    for (int k = 0; k <= 20; ++k) c.success_thresholds.push_back(k / 20.0);
    c.precision.assign(c.precision_thresholds.size(), 0.0);
    c.success.assign(c.success_thresholds.size(), 0.0);
    if (track.empty()) return c;

    const auto n = static_cast<double>(track.size());
    for (std::size_t f = 0; f < track.size(); ++f) {
        const double err = center_error(track[f], gt[f]);
        const double ov = overlap_score(track[f], gt[f]);
        for (std::size_t t = 0; t < c.precision.size(); ++t)
            if (err <= c.precision_thresholds[t]) c.precision[t] += 1.0;
        for (std::size_t k = 0; k < c.success.size(); ++k)
            if (ov > c.success_thresholds[k]) c.success[k] += 1.0;
    }
    for (double& v : c.precision) v /= n;
    for (double& v : c.success) v /= n;
    c.dp20 = c.precision[20];
    double sum = 0.0;
    for (double v : c.success) sum += v;
    c.auc = sum / static_cast<double>(c.success.size());
    return c;
}

namespace {

std::vector<double> split_numbers(const std::string& text) {
    std::string s = text;
    std::replace_if(s.begin(), s.end(), [](char ch) { return ch == ',' || ch == ';' || ch == '\t'; }, ' ');
    std::istringstream in(s);
    std::vector<double> out;
    std::string tok;
    while (in >> tok) {
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(tok, &used);
        } catch (const std::exception&) {
            throw std::invalid_argument("not a number: '" + tok + "'");
        }
        if (used != tok.size() || !std::isfinite(v)) throw std::invalid_argument("not a number: '" + tok + "'");
        out.push_back(v);
    }
    return out;
}

bool blank(const std::string& line) {
    return std::all_of(line.begin(), line.end(), [](unsigned char ch) { return std::isspace(ch); });
}

template <typename Fn>
void for_each_line(const fs::path& path, Fn&& fn) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path.string());
    std::string line;
    int number = 0;
    while (std::getline(in, line)) {
        ++number;
        if (blank(line)) continue;
        try {
            fn(line);
        } catch (const std::invalid_argument& e) {
            throw ParseError(path.string(), number, e.what());
        }
    }
}

}  // namespace

Box parse_box(const std::string& text) {
    const auto v = split_numbers(text);
    if (v.size() != 4) throw std::invalid_argument("expected 4 values x,y,w,h, got " + std::to_string(v.size()));
    if (v[2] < 0.0 || v[3] < 0.0) throw std::invalid_argument("negative box size");
    return {v[0], v[1], v[2], v[3]};
}

std::vector<Box> read_ground_truth(const fs::path& path) {
    std::vector<Box> boxes;
    for_each_line(path, [&](const std::string& line) {
        Box b = parse_box(line);
        b.x -= 1.0;
        b.y -= 1.0;
        boxes.push_back(b);
    });
    return boxes;
}

std::vector<Box> read_results(const fs::path& path) {
    std::vector<Box> boxes;
    for_each_line(path, [&](const std::string& line) {
        auto v = split_numbers(line);
        if (v.size() == 5) v.erase(v.begin());
        if (v.size() != 4)
            throw std::invalid_argument("expected frame_index,x,y,w,h, got " + std::to_string(v.size()) + " values");
        boxes.push_back({v[0] - 1.0, v[1] - 1.0, v[2], v[3]});
    });
    return boxes;
}

Sequence load_sequence(const fs::path& dir, bool require_ground_truth) {
    if (!fs::is_directory(dir)) throw IoError("sequence directory not found: " + dir.string());
    Sequence seq;
    seq.name = dir.filename().string();
    if (seq.name.empty()) seq.name = dir.parent_path().filename().string();

    const fs::path gt = dir / "groundtruth_rect.txt";
    const bool have_gt = fs::exists(gt);
    if (!have_gt && require_ground_truth) throw IoError("missing ground truth " + gt.string());

    const fs::path img_dir = fs::is_directory(dir / "img") ? dir / "img" : dir;
    static const std::vector<std::string> kExt = {".jpg", ".jpeg", ".png", ".bmp", ".pgm", ".ppm", ".tif", ".tiff"};
    std::vector<std::pair<long long, fs::path>> found;
    for (const auto& entry : fs::directory_iterator(img_dir)) {
        if (!entry.is_regular_file()) continue;
        std::string ext = entry.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
        if (std::find(kExt.begin(), kExt.end(), ext) == kExt.end()) continue;
        const std::string stem = entry.path().stem().string();
        if (stem.empty() || !std::all_of(stem.begin(), stem.end(), [](unsigned char ch) { return std::isdigit(ch); }))
            continue;
        found.emplace_back(std::stoll(stem), entry.path());
    }
    std::sort(found.begin(), found.end());
    for (auto& f : found) seq.frames.push_back(std::move(f.second));
    if (seq.frames.empty()) throw IoError("no numbered image frames in " + img_dir.string());

    if (!have_gt) return seq;
    seq.ground_truth = read_ground_truth(gt);
    if (seq.ground_truth.size() > seq.frames.size())
        throw IoError("ground truth has more lines than there are frames in " + dir.string());
    return seq;
}

void write_results(const fs::path& path, const std::vector<int>& frame_indices, const std::vector<Box>& boxes) {
    if (frame_indices.size() != boxes.size()) throw DimensionError("write_results: index/box count mismatch");
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    char buf[160];
    for (std::size_t i = 0; i < boxes.size(); ++i) {
        const Box& b = boxes[i];
        std::snprintf(buf, sizeof buf, "%d,%.4f,%.4f,%.4f,%.4f\n", frame_indices[i], b.x + 1.0, b.y + 1.0, b.w, b.h);
        out << buf;
    }
    if (!out) throw IoError("failed writing " + path.string());
}

void write_curve_csv(const fs::path& path, const std::vector<double>& thresholds, const std::vector<double>& values) {
    if (thresholds.size() != values.size()) throw DimensionError("write_curve_csv: size mismatch");
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path.string());
    out << "threshold,value\n";
    char buf[96];
    for (std::size_t i = 0; i < values.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%g,%.6f\n", thresholds[i], values[i]);
        out << buf;
    }
    if (!out) throw IoError("failed writing " + path.string());
}

std::string format_summary(const MetricCurves& curves) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "dp20=%.4f,auc=%.4f", curves.dp20, curves.auc);
    return buf;
}

GrayImage load_gray(const fs::path& path) {
    const cv::Mat m = cv::imread(path.string(), cv::IMREAD_GRAYSCALE);
    if (m.empty()) throw IoError("cannot decode image " + path.string());
    GrayImage img(m.cols, m.rows);
    for (int y = 0; y < m.rows; ++y) {
        const auto* row = m.ptr<std::uint8_t>(y);
        for (int x = 0; x < m.cols; ++x) img.at(x, y) = row[x] / 255.0;
    }
    return img;
}

void save_gray(const fs::path& path, const GrayImage& img) {
    cv::Mat m(img.height, img.width, CV_8UC1);
    for (int y = 0; y < img.height; ++y)
        for (int x = 0; x < img.width; ++x)
            m.at<std::uint8_t>(y, x) = static_cast<std::uint8_t>(std::lround(std::clamp(img.at(x, y), 0.0, 1.0) * 255.0));
    if (!cv::imwrite(path.string(), m)) throw IoError("cannot write image " + path.string());
}

}  // namespace patchtrack
