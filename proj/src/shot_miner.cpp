#include "ccbir/shot_miner.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "ccbir/common.hpp"
#include "ccbir/rng.hpp"

namespace ccbir {

ShotType shot_type_from_string(const std::string& s) {
    if (s == "ELS") return ShotType::ELS;
    if (s == "LS") return ShotType::LS;
    if (s == "MS") return ShotType::MS;
    if (s == "CU") return ShotType::CU;
    if (s == "I") return ShotType::I;
    if (s == "NA" || s == "NONE" || s == "None") return ShotType::NA;
    throw DataError("unknown shot type '" + s + "'");
}

std::string to_string(ShotType t) {
    switch (t) {
        case ShotType::ELS: return "ELS";
        case ShotType::LS: return "LS";
        case ShotType::MS: return "MS";
        case ShotType::CU: return "CU";
        case ShotType::I: return "I";
        case ShotType::NA: return "NA";
    }
    return "NA";
}

std::vector<FrameRef> select_frames(const ShotRecord& shot) {
    if (shot.start_frame > shot.end_frame) {
        throw DataError("select_frames: shot " + shot.shot_id +
                        " has start_frame > end_frame");
    }
    constexpr int kBlock = 10;
    constexpr int kMaxFrames = 7;
    std::vector<std::int64_t> picked;
    for (std::int64_t block_start = shot.start_frame;
         block_start <= shot.end_frame &&
         static_cast<int>(picked.size()) < kMaxFrames;
         block_start += kBlock) {
        const std::int64_t block_end =
            std::min(block_start + kBlock - 1, shot.end_frame);
        if (picked.empty() || picked.back() != block_start) {
            picked.push_back(block_start);
        }
        if (static_cast<int>(picked.size()) >= kMaxFrames) break;
        if (block_end != block_start) picked.push_back(block_end);
    }

    std::vector<FrameRef> out;
    out.reserve(picked.size());
    for (std::int64_t idx : picked) {
        FrameRef f;
        f.film_id = shot.film_id;
        f.shot_id = shot.shot_id;
        f.frame_index = idx;
        f.path = shot.film_id + "/" + shot.shot_id + "/" + std::to_string(idx) +
                 ".png";
        out.push_back(std::move(f));
    }
    return out;
}

std::vector<ShotRecord> filter_shots(const std::vector<ShotRecord>& records) {
    std::vector<ShotRecord> out;
    out.reserve(records.size());
    for (const auto& r : records) {
        if (r.shot_type == ShotType::I || r.shot_type == ShotType::NA) continue;
        out.push_back(r);
    }
    return out;
}

TripletManifest build_triplets(
    const std::vector<std::vector<FrameRef>>& frames_by_shot,
    std::uint64_t rng_seed) {
    int nonempty = 0;
    for (const auto& shot : frames_by_shot) {
        if (!shot.empty()) ++nonempty;
    }
    if (nonempty < 2) {
        throw DataError("build_triplets: need frames from at least 2 shots, have " +
                        std::to_string(nonempty));
    }

    // Flat frame list per shot index, for uniform negative draws.
    std::vector<std::pair<std::size_t, std::size_t>> all;  // (shot, frame)
    for (std::size_t s = 0; s < frames_by_shot.size(); ++s) {
        for (std::size_t f = 0; f < frames_by_shot[s].size(); ++f) {
            all.emplace_back(s, f);
        }
    }

    TripletManifest manifest;
    manifest.rng_seed = rng_seed;
    manifest.tool_version = kToolVersion;
    Rng rng = make_rng(rng_seed);
    for (std::size_t s = 0; s < frames_by_shot.size(); ++s) {
        const auto& shot = frames_by_shot[s];
        for (std::size_t f = 0; f + 1 < shot.size(); ++f) {
            Triplet t;
            t.anchor = shot[f];
            t.positive = shot[f + 1];
            // Uniform over frames of other shots, by rejection.
            while (true) {
                const auto& cand = all[uniform_int(rng, all.size())];
                if (cand.first == s) continue;
                t.negative = frames_by_shot[cand.first][cand.second];
                break;
            }
            manifest.triplets.push_back(std::move(t));
        }
    }
    return manifest;
}

std::vector<FrameRef> central_frame_database(
    const std::vector<std::vector<FrameRef>>& frames_by_shot) {
    std::vector<FrameRef> out;
    out.reserve(frames_by_shot.size());
    for (const auto& shot : frames_by_shot) {
        if (shot.empty()) continue;
        out.push_back(shot[(shot.size() - 1) / 2]);  // lower median
    }
    return out;
}

FilmSplit split_films(const std::vector<std::string>& film_ids,
                      double test_fraction, std::uint64_t seed) {
    if (test_fraction < 0.0 || test_fraction > 1.0) {
        throw ConfigError("split_films: test_fraction must be in [0,1]");
    }
    std::vector<std::string> films = film_ids;
    std::sort(films.begin(), films.end());
    films.erase(std::unique(films.begin(), films.end()), films.end());
    Rng rng = make_rng(derive_seed(seed, 0x73706c6974ULL));
    shuffle(films, rng);
    const auto n_test = static_cast<std::size_t>(
        std::min<double>(films.size(),
                         std::floor(test_fraction * films.size() + 0.5)));
    FilmSplit split;
    for (std::size_t i = 0; i < films.size(); ++i) {
        if (i < films.size() - n_test) {
            split.train_films.push_back(films[i]);
        } else {
            split.test_films.push_back(films[i]);
        }
    }
    return split;
}

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return {};
    std::size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(line);
    while (std::getline(is, cur, ',')) out.push_back(trim(cur));
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

std::int64_t parse_int(const std::string& s, int lineno, const char* field) {
    try {
        std::size_t pos = 0;
        const std::int64_t v = std::stoll(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw DataError("annotations line " + std::to_string(lineno) +
                        ": bad integer for " + field + ": '" + s + "'");
    }
}

std::vector<ShotRecord> load_annotations_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw DataError("cannot open annotations " + path);
    std::string line;
    if (!std::getline(f, line)) throw DataError("empty annotations " + path);
    const auto header = split_csv(line);
    const std::vector<std::string> base = {"film_id", "shot_id", "start_frame",
                                           "end_frame", "shot_type"};
    if (header.size() != 5 && header.size() != 9) {
        throw DataError("annotations line 1: expected 5 or 9 columns, got " +
                        std::to_string(header.size()));
    }
    for (std::size_t i = 0; i < base.size(); ++i) {
        if (header[i] != base[i]) {
            throw DataError("annotations line 1: column " + std::to_string(i) +
                            " must be '" + base[i] + "', got '" + header[i] + "'");
        }
    }
    const bool with_overscan = header.size() == 9;

    std::vector<ShotRecord> out;
    int lineno = 1;
    while (std::getline(f, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        const auto cols = split_csv(line);
        if (cols.size() != header.size()) {
            throw DataError("annotations line " + std::to_string(lineno) +
                            ": expected " + std::to_string(header.size()) +
                            " columns, got " + std::to_string(cols.size()));
        }
        ShotRecord r;
        r.film_id = cols[0];
        r.shot_id = cols[1];
        r.start_frame = parse_int(cols[2], lineno, "start_frame");
        r.end_frame = parse_int(cols[3], lineno, "end_frame");
        try {
            r.shot_type = shot_type_from_string(cols[4]);
        } catch (const DataError& e) {
            throw DataError("annotations line " + std::to_string(lineno) + ": " +
                            e.what());
        }
        if (r.start_frame > r.end_frame) {
            throw DataError("annotations line " + std::to_string(lineno) +
                            ": start_frame > end_frame");
        }
        if (with_overscan && !cols[5].empty()) {
            CropRect rect;
            rect.left = static_cast<int>(parse_int(cols[5], lineno, "overscan_left"));
            rect.top = static_cast<int>(parse_int(cols[6], lineno, "overscan_top"));
            rect.width = static_cast<int>(parse_int(cols[7], lineno, "overscan_width"));
            rect.height = static_cast<int>(parse_int(cols[8], lineno, "overscan_height"));
            r.overscan = rect;
        }
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<ShotRecord> load_annotations_jsonl(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw DataError("cannot open annotations " + path);
    std::vector<ShotRecord> out;
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw DataError("annotations line " + std::to_string(lineno) +
                            ": invalid JSON: " + e.what());
        }
        try {
            ShotRecord r;
            r.film_id = j.at("film_id").get<std::string>();
            r.shot_id = j.at("shot_id").get<std::string>();
            r.start_frame = j.at("start_frame").get<std::int64_t>();
            r.end_frame = j.at("end_frame").get<std::int64_t>();
            r.shot_type = shot_type_from_string(j.at("shot_type").get<std::string>());
            if (j.contains("overscan") && !j["overscan"].is_null()) {
                const auto& o = j["overscan"];
                r.overscan = CropRect{o.at("left").get<int>(), o.at("top").get<int>(),
                                      o.at("width").get<int>(), o.at("height").get<int>()};
            }
            if (r.start_frame > r.end_frame) {
                throw DataError("start_frame > end_frame");
            }
            out.push_back(std::move(r));
        } catch (const nlohmann::json::exception& e) {
            throw DataError("annotations line " + std::to_string(lineno) + ": " +
                            e.what());
        } catch (const DataError& e) {
            throw DataError("annotations line " + std::to_string(lineno) + ": " +
                            e.what());
        }
    }
    return out;
}

bool has_suffix(const std::string& s, const std::string& suf) {
    return s.size() >= suf.size() &&
           s.compare(s.size() - suf.size(), suf.size(), suf) == 0;
}

nlohmann::json frame_to_json(const FrameRef& f) {
    return {{"film_id", f.film_id},
            {"shot_id", f.shot_id},
            {"frame_index", f.frame_index},
            {"path", f.path}};
}

FrameRef frame_from_json(const nlohmann::json& j) {
    FrameRef f;
    f.film_id = j.at("film_id").get<std::string>();
    f.shot_id = j.at("shot_id").get<std::string>();
    f.frame_index = j.at("frame_index").get<std::int64_t>();
    f.path = j.at("path").get<std::string>();
    return f;
}

}  // namespace

std::vector<ShotRecord> load_shot_annotations(const std::string& path) {
    if (has_suffix(path, ".csv")) return load_annotations_csv(path);
    if (has_suffix(path, ".jsonl") || has_suffix(path, ".ndjson")) {
        return load_annotations_jsonl(path);
    }
    throw DataError("annotations must be .csv or .jsonl: " + path);
}

void write_triplet_manifest(const TripletManifest& manifest,
                            const std::string& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw DataError("cannot open " + path);
    nlohmann::json header = {{"rng_seed", manifest.rng_seed},
                             {"tool_version", manifest.tool_version}};
    f << header.dump() << "\n";
    for (const auto& t : manifest.triplets) {
        nlohmann::json j = {{"anchor", frame_to_json(t.anchor)},
                            {"positive", frame_to_json(t.positive)},
                            {"negative", frame_to_json(t.negative)}};
        f << j.dump() << "\n";
    }
    if (!f) throw DataError("write failed for " + path);
}

TripletManifest read_triplet_manifest(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw DataError("cannot open " + path);
    std::string line;
    if (!std::getline(f, line)) throw DataError("empty manifest " + path);
    TripletManifest manifest;
    try {
        nlohmann::json header = nlohmann::json::parse(line);
        manifest.rng_seed = header.at("rng_seed").get<std::uint64_t>();
        manifest.tool_version = header.value("tool_version", "");
        int lineno = 1;
        while (std::getline(f, line)) {
            ++lineno;
            if (trim(line).empty()) continue;
            nlohmann::json j = nlohmann::json::parse(line);
            Triplet t;
            t.anchor = frame_from_json(j.at("anchor"));
            t.positive = frame_from_json(j.at("positive"));
            t.negative = frame_from_json(j.at("negative"));
            manifest.triplets.push_back(std::move(t));
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError("triplet manifest " + path + ": " + e.what());
    }
    return manifest;
}

void write_frames_manifest(const std::vector<FrameRef>& frames,
                           const std::string& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw DataError("cannot open " + path);
    for (const auto& fr : frames) {
        f << frame_to_json(fr).dump() << "\n";
    }
    if (!f) throw DataError("write failed for " + path);
}

std::vector<FrameRef> read_frames_manifest(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw DataError("cannot open " + path);
    std::vector<FrameRef> out;
    std::string line;
    int lineno = 0;
    try {
        while (std::getline(f, line)) {
            ++lineno;
            if (trim(line).empty()) continue;
            out.push_back(frame_from_json(nlohmann::json::parse(line)));
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError("frames manifest " + path + " line " +
                        std::to_string(lineno) + ": " + e.what());
    }
    return out;
}

std::vector<std::vector<FrameRef>> group_by_shot(
    const std::vector<FrameRef>& frames) {
    std::vector<std::vector<FrameRef>> groups;
    std::map<std::pair<std::string, std::string>, std::size_t> index;
    for (const auto& f : frames) {
        const auto key = std::make_pair(f.film_id, f.shot_id);
        auto it = index.find(key);
        if (it == index.end()) {
            index.emplace(key, groups.size());
            groups.push_back({f});
        } else {
            groups[it->second].push_back(f);
        }
    }
    return groups;
}

}  // namespace ccbir
