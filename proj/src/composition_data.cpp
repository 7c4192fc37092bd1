#include "ccbir/composition_data.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "ccbir/common.hpp"
#include "ccbir/image_io.hpp"
#include "ccbir/rng.hpp"

namespace fs = std::filesystem;

namespace ccbir {

const std::array<std::string, kNumCompositionClasses>& composition_class_names() {
    static const std::array<std::string, kNumCompositionClasses> names = {
        "rule-of-thirds", "center",   "horizontal",
        "symmetric",      "diagonal", "curved",
        "vertical",       "triangle", "repeated pattern"};
    return names;
}

int composition_class_index(const std::string& name) {
    std::string norm = name;
    std::replace(norm.begin(), norm.end(), '_', ' ');
    const auto& names = composition_class_names();
    for (int i = 0; i < kNumCompositionClasses; ++i) {
        if (names[i] == norm) return i;
    }
    throw DataError("unknown composition class name: '" + name + "'");
}

int CompositionLabel::count() const {
    int n = 0;
    for (int c : classes) n += c != 0;
    return n;
}

int CompositionLabel::first() const {
    for (int i = 0; i < kNumCompositionClasses; ++i) {
        if (classes[i]) return i;
    }
    throw DataError("composition label with no class set");
}

std::vector<int> CompositionLabel::as_vector() const {
    return std::vector<int>(classes.begin(), classes.end());
}

double CompositionLoadStats::train_percent(int cls) const {
    return train_total ? 100.0 * train_counts[cls] / train_total : 0.0;
}

double CompositionLoadStats::test_percent(int cls) const {
    return test_total ? 100.0 * test_counts[cls] / test_total : 0.0;
}

namespace {

bool is_image_file(const fs::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return ext == ".png" || ext == ".jpg" || ext == ".jpeg" || ext == ".pgm";
}

std::vector<std::string> split_on(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, sep)) out.push_back(cur);
    return out;
}

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return {};
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

void count_sample(CompositionLoadStats& stats, const CompositionSample& s) {
    for (int c = 0; c < kNumCompositionClasses; ++c) {
        if (!s.label.is_set(c)) continue;
        if (s.split == Split::kTrain) {
            ++stats.train_counts[c];
        } else {
            ++stats.test_counts[c];
        }
    }
    if (s.split == Split::kTrain) {
        ++stats.train_total;
    } else {
        ++stats.test_total;
    }
}

bool try_load_sample(const std::string& path, CompositionLabel label,
                     Split split, CompositionDataset& out) {
    try {
        CompositionSample s;
        s.image = resize_normalize(load_grayscale(path));
        s.image.source_id = path;
        s.label = label;
        s.split = split;
        count_sample(out.stats, s);
        out.samples.push_back(std::move(s));
        return true;
    } catch (const DataError& e) {
        ++out.stats.skipped;
        out.stats.warnings.push_back(std::string("skipped ") + path + ": " +
                                     e.what());
        return false;
    }
}

void load_from_manifest(const fs::path& root, const fs::path& manifest,
                        CompositionDataset& out) {
    std::ifstream f(manifest);
    if (!f) throw DataError("cannot open manifest " + manifest.string());
    std::string line;
    if (!std::getline(f, line)) {
        throw DataError("empty manifest " + manifest.string());
    }
    if (trim(line) != "path,split,labels") {
        throw DataError("manifest header must be 'path,split,labels', got '" +
                        trim(line) + "'");
    }
    int lineno = 1;
    while (std::getline(f, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        const auto cols = split_on(line, ',');
        if (cols.size() != 3) {
            throw DataError("manifest line " + std::to_string(lineno) +
                            ": expected 3 columns, got " +
                            std::to_string(cols.size()));
        }
        const std::string rel = trim(cols[0]);
        const std::string split_s = trim(cols[1]);
        Split split;
        if (split_s == "train") {
            split = Split::kTrain;
        } else if (split_s == "test") {
            split = Split::kTest;
        } else {
            throw DataError("manifest line " + std::to_string(lineno) +
                            ": split must be train|test, got '" + split_s + "'");
        }
        CompositionLabel label;
        const auto labels = split_on(trim(cols[2]), ';');
        if (labels.empty()) {
            throw DataError("manifest line " + std::to_string(lineno) +
                            ": no labels");
        }
        for (const auto& l : labels) {
            label.set(composition_class_index(trim(l)));
        }
        try_load_sample((root / rel).string(), label, split, out);
    }
}

void load_from_class_dirs(const fs::path& root, CompositionDataset& out) {
    bool any_split = false;
    for (const auto& [split_name, split] :
         {std::pair{std::string("train"), Split::kTrain},
          std::pair{std::string("test"), Split::kTest}}) {
        const fs::path split_dir = root / split_name;
        if (!fs::is_directory(split_dir)) continue;
        any_split = true;
        std::vector<fs::path> class_dirs;
        for (const auto& e : fs::directory_iterator(split_dir)) {
            if (e.is_directory()) class_dirs.push_back(e.path());
        }
        std::sort(class_dirs.begin(), class_dirs.end());
        for (const auto& cdir : class_dirs) {
            // Throws on unknown class names: a misspelled directory should
            // fail loudly, not be silently ignored.
            const int cls = composition_class_index(cdir.filename().string());
            CompositionLabel label;
            label.set(cls);
            std::vector<fs::path> files;
            for (const auto& e : fs::directory_iterator(cdir)) {
                if (e.is_regular_file() && is_image_file(e.path())) {
                    files.push_back(e.path());
                }
            }
            std::sort(files.begin(), files.end());
            for (const auto& p : files) {
                try_load_sample(p.string(), label, split, out);
            }
        }
    }
    if (!any_split) {
        out.stats.warnings.push_back(
            "no manifest.csv and no train/ or test/ directories under " +
            root.string() + "; dataset is empty");
    }
}

}  // namespace

CompositionDataset load_kupcp(const std::string& root) {
    if (!fs::is_directory(root)) {
        throw DataError("load_kupcp: not a directory: " + root);
    }
    CompositionDataset out;
    const fs::path manifest = fs::path(root) / "manifest.csv";
    if (fs::is_regular_file(manifest)) {
        load_from_manifest(root, manifest, out);
    } else {
        load_from_class_dirs(root, out);
    }
    if (out.samples.empty()) {
        out.stats.warnings.push_back("load_kupcp: no samples loaded from " +
                                     root);
    }
    return out;
}

namespace {

constexpr int kSide = 256;

void noise_background(GrayscaleImage& img, Rng& rng) {
    for (double& p : img.pixels) {
        p = 0.08 + 0.14 * uniform_real(rng);
    }
}

void fill_disc(GrayscaleImage& img, double cx, double cy, double r, double v) {
    const int y0 = std::max(0, static_cast<int>(cy - r) - 1);
    const int y1 = std::min(img.height - 1, static_cast<int>(cy + r) + 1);
    const int x0 = std::max(0, static_cast<int>(cx - r) - 1);
    const int x1 = std::min(img.width - 1, static_cast<int>(cx + r) + 1);
    for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
            const double dx = x - cx, dy = y - cy;
            if (dx * dx + dy * dy <= r * r) img.at(y, x) = v;
        }
    }
}

void fill_hband(GrayscaleImage& img, double cy, double half, double v) {
    for (int y = 0; y < img.height; ++y) {
        if (std::abs(y - cy) <= half) {
            for (int x = 0; x < img.width; ++x) img.at(y, x) = v;
        }
    }
}

void fill_vband(GrayscaleImage& img, double cx, double half, double v) {
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            if (std::abs(x - cx) <= half) img.at(y, x) = v;
        }
    }
}

// Band around the main diagonal (top-left to bottom-right).
void fill_diagonal(GrayscaleImage& img, double half, double v) {
    const double scale = static_cast<double>(img.width) / img.height;
    for (int y = 0; y < img.height; ++y) {
        const double cx = y * scale;
        const int x0 = std::max(0, static_cast<int>(cx - half));
        const int x1 = std::min(img.width - 1, static_cast<int>(cx + half));
        for (int x = x0; x <= x1; ++x) img.at(y, x) = v;
    }
}

// Upper semicircular arc: an arch-like curve.
void fill_arc(GrayscaleImage& img, double cx, double cy, double r, double half,
              double v) {
    for (int y = 0; y < img.height; ++y) {
        for (int x = 0; x < img.width; ++x) {
            if (y > cy) continue;
            const double dx = x - cx, dy = y - cy;
            const double d = std::sqrt(dx * dx + dy * dy);
            if (std::abs(d - r) <= half) img.at(y, x) = v;
        }
    }
}

void fill_triangle(GrayscaleImage& img, double cx, double cy, double size,
                   double v) {
    // Isoceles triangle, apex up: apex (cx, cy-size), base y = cy+size*0.8.
    const double apex_y = cy - size;
    const double base_y = cy + 0.8 * size;
    const double half_base = size;
    for (int y = std::max(0, static_cast<int>(apex_y));
         y <= std::min(img.height - 1, static_cast<int>(base_y)); ++y) {
        const double t = (y - apex_y) / (base_y - apex_y);
        const double half = t * half_base;
        const int x0 = std::max(0, static_cast<int>(cx - half));
        const int x1 = std::min(img.width - 1, static_cast<int>(cx + half));
        for (int x = x0; x <= x1; ++x) img.at(y, x) = v;
    }
}

}  // namespace

std::vector<CompositionSample> generate_synthetic_composition(
    int n_per_class, std::uint64_t seed, Split split) {
    if (n_per_class < 1) {
        throw ConfigError("generate_synthetic_composition: n_per_class must be >= 1");
    }
    Rng rng = make_rng(derive_seed(
        seed, split == Split::kTrain ? 0x7261696eULL : 0x74657374ULL));
    std::vector<CompositionSample> out;
    out.reserve(static_cast<std::size_t>(n_per_class) * kNumCompositionClasses);

    for (int cls = 0; cls < kNumCompositionClasses; ++cls) {
        for (int i = 0; i < n_per_class; ++i) {
            GrayscaleImage img(kSide, kSide);
            noise_background(img, rng);
            const double bright = 0.78 + 0.18 * uniform_real(rng);
            const double jx = uniform_range(rng, -6.0, 6.0);
            const double jy = uniform_range(rng, -6.0, 6.0);
            const double cx = kSide / 2.0 + jx;
            const double cy = kSide / 2.0 + jy;
            switch (cls) {
                case 0:  // rule-of-thirds: small subject at a third point
                    fill_disc(img, kSide / 3.0 + jx, kSide / 3.0 + jy,
                              uniform_range(rng, 13.0, 17.0), bright);
                    break;
                case 1:  // center: dominant centered subject
                    fill_disc(img, cx, cy, uniform_range(rng, 30.0, 37.0),
                              bright);
                    break;
                case 2:  // horizontal: horizon band
                    fill_hband(img, cy + uniform_range(rng, -20.0, 20.0),
                               uniform_range(rng, 6.0, 9.0), bright);
                    break;
                case 3:  // symmetric: mirrored pair about the vertical axis
                {
                    const double dx = uniform_range(rng, 52.0, 68.0);
                    const double r = uniform_range(rng, 16.0, 20.0);
                    fill_disc(img, kSide / 2.0 - dx, cy, r, bright);
                    fill_disc(img, kSide / 2.0 + dx, cy, r, bright);
                    break;
                }
                case 4:  // diagonal: corner-to-corner band
                    fill_diagonal(img, uniform_range(rng, 6.0, 9.0), bright);
                    break;
                case 5:  // curved: arch-shaped arc
                    fill_arc(img, cx, cy + uniform_range(rng, 30.0, 50.0),
                             uniform_range(rng, 62.0, 78.0),
                             uniform_range(rng, 5.0, 7.0), bright);
                    break;
                case 6:  // vertical: upright band
                    fill_vband(img, cx + uniform_range(rng, -20.0, 20.0),
                               uniform_range(rng, 6.0, 9.0), bright);
                    break;
                case 7:  // triangle
                    fill_triangle(img, cx, cy,
                                  uniform_range(rng, 55.0, 70.0), bright);
                    break;
                case 8:  // repeated pattern: grid of small discs
                {
                    const double r = uniform_range(rng, 8.0, 11.0);
                    const double ox = uniform_range(rng, -8.0, 8.0);
                    const double oy = uniform_range(rng, -8.0, 8.0);
                    for (int gy = 0; gy < 4; ++gy) {
                        for (int gx = 0; gx < 4; ++gx) {
                            fill_disc(img, 46.0 + 54.0 * gx + ox,
                                      46.0 + 54.0 * gy + oy, r, bright);
                        }
                    }
                    break;
                }
                default:
                    break;
            }
            CompositionSample s;
            s.image = std::move(img);
            s.image.source_id =
                "synth-s" + std::to_string(seed) + "-" +
                (split == Split::kTrain ? std::string("train") : "test") + "-" +
                std::to_string(cls) + "-" + std::to_string(i);
            s.label.set(cls);
            s.split = split;
            out.push_back(std::move(s));
        }
    }
    return out;
}

}  // namespace ccbir
