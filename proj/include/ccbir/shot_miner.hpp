#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ccbir/image.hpp"

namespace ccbir {

enum class ShotType { ELS, LS, MS, CU, I, NA };

ShotType shot_type_from_string(const std::string& s);
std::string to_string(ShotType t);

/// One annotated shot: a contiguous frame range within a film, its type,
/// and an optional over-scan crop window.
struct ShotRecord {
    std::string film_id;
    std::string shot_id;
    std::int64_t start_frame = 0;
    std::int64_t end_frame = 0;
    ShotType shot_type = ShotType::NA;
    std::optional<CropRect> overscan;
};

struct FrameRef {
    std::string film_id;
    std::string shot_id;
    std::int64_t frame_index = 0;
    std::string path;  // relative to the frames root unless absolute

    std::string key() const {
        return film_id + "/" + shot_id + "/" + std::to_string(frame_index);
    }
};

struct Triplet {
    FrameRef anchor;
    FrameRef positive;  // next selected frame in the anchor's shot
    FrameRef negative;  // seeded-random frame from another shot
};

struct TripletManifest {
    std::uint64_t rng_seed = 0;
    std::string tool_version;
    std::vector<Triplet> triplets;
};

/// Frame sampling rule: partition the shot's frames into consecutive blocks
/// of ten starting at start_frame, take the first and last existing frame
/// of each block, deduplicate, and keep at most the first seven selections.
/// Paths follow the layout {film_id}/{shot_id}/{frame_index}.png.
std::vector<FrameRef> select_frames(const ShotRecord& shot);

/// Drop Intertitle and Not-Available shots; order preserved. Idempotent.
std::vector<ShotRecord> filter_shots(const std::vector<ShotRecord>& records);

/// One triplet per (anchor, next-frame-in-shot) pair; the negative is drawn
/// uniformly from the frames of all other shots. Deterministic per seed.
/// Fewer than two nonempty shots cannot form negatives -> DataError.
TripletManifest build_triplets(
    const std::vector<std::vector<FrameRef>>& frames_by_shot,
    std::uint64_t rng_seed);

/// One frame per shot: the lower-median element of its selected frames.
std::vector<FrameRef> central_frame_database(
    const std::vector<std::vector<FrameRef>>& frames_by_shot);

/// Deterministic film-level split (seeded shuffle of the unique film list).
struct FilmSplit {
    std::vector<std::string> train_films;
    std::vector<std::string> test_films;
};
FilmSplit split_films(const std::vector<std::string>& film_ids,
                      double test_fraction, std::uint64_t seed);

// --- annotation & manifest I/O -------------------------------------------

/// Parse shot annotations from CSV (header: film_id,shot_id,start_frame,
/// end_frame,shot_type[,overscan_left,overscan_top,overscan_width,
/// overscan_height]) or JSON-lines (one object per line, same field names,
/// overscan as a nested object). The format is chosen by file extension:
/// .csv vs .jsonl/.ndjson. Malformed rows raise DataError with the line
/// number.
std::vector<ShotRecord> load_shot_annotations(const std::string& path);

/// JSON-lines: a header record {"rng_seed":..,"tool_version":..} followed by
/// one triplet object per line.
void write_triplet_manifest(const TripletManifest& manifest,
                            const std::string& path);
TripletManifest read_triplet_manifest(const std::string& path);

/// JSON-lines frame list (film_id, shot_id, frame_index, path per line).
void write_frames_manifest(const std::vector<FrameRef>& frames,
                           const std::string& path);
std::vector<FrameRef> read_frames_manifest(const std::string& path);

/// Regroup a flat frame list by (film_id, shot_id), preserving first-seen
/// shot order and frame order within each shot.
std::vector<std::vector<FrameRef>> group_by_shot(
    const std::vector<FrameRef>& frames);

}  // namespace ccbir
