#pragma once

#include "lwinnn/bundle.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace lwinnn {

enum class Split { train, test };

std::string_view to_string(Split split);

struct ManifestEntry {
    std::filesystem::path bundle_path;
    Label label = Label::normal;
    std::optional<std::filesystem::path> mask_path;
};

/// One split of one category: a list of bundle files with labels and masks.
///
/// On disk this is UTF-8 text, one tab-separated entry per line:
/// `bundle_path <TAB> normal|anomalous [<TAB> mask_path]`. Lines starting
/// with '#' and blank lines are ignored. Relative paths are resolved against
/// the manifest's own directory when read.
struct DatasetManifest {
    Split split = Split::train;
    std::string category;
    std::vector<ManifestEntry> entries;
};

struct ManifestViolation {
    std::string message;
    std::vector<std::size_t> entries; // indices into DatasetManifest::entries
};

/// Throws FormatError (with line number) on malformed lines, IoError if unreadable.
DatasetManifest read_manifest(const std::filesystem::path& path, Split split, std::string category = {});
void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

/// Empty result iff every path resolves, labels agree with the split, and all
/// bundles share per-layer channel counts and spatial sizes. Never throws on
/// bad data.
std::vector<ManifestViolation> validate_manifest(const DatasetManifest& manifest);

std::string describe(const ManifestViolation& v);

} // namespace lwinnn
