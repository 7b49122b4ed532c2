#pragma once

#include <map>
#include <string>

#include "disparity/features.hpp"
#include "disparity/gmm.hpp"
#include "disparity/identify.hpp"

namespace disparity {

// Everything needed to identify new utterances: the feature recipe, the EM
// settings used for test-density fits, the rotation flag, and each enrolled
// speaker's model.  Scoring choices (measure, estimator, trimming, beta)
// are runtime options, not part of the archive.
struct ModelArchive {
  FeatureConfig feature_config;
  EmConfig em_config;
  bool use_pct = false;
  std::map<std::string, SpeakerModel> speakers;
};

// Writes the archive to `path` atomically (temp file + rename).
//
// The format is a little-endian binary container; doubles are stored as
// their raw IEEE-754 bits, so a save/load round trip is bit-exact.
void save_archive(const ModelArchive& archive, const std::string& path);

// Reads an archive written by `save_archive`.  Truncated files, bad magic
// bytes, unsupported versions, and inconsistent contents all raise
// DataError with a description of what was wrong.
ModelArchive load_archive(const std::string& path);

// Lossless text rendering of an archive (hex floats), for inspection and
// diffing.  Stable across platforms for identical archives.
std::string archive_to_text(const ModelArchive& archive);

}  // namespace disparity

