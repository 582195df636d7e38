#include "lwinnn/manifest.hpp"

#include "lwinnn/binary_io.hpp"
#include "lwinnn/errors.hpp"

#include <fstream>
#include <sstream>

namespace lwinnn {

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t tab = line.find('\t', start);
        fields.push_back(line.substr(start, tab == std::string::npos ? std::string::npos : tab - start));
        if (tab == std::string::npos) {
            break;
        }
        start = tab + 1;
    }
    return fields;
}

std::string entry_name(const DatasetManifest& m, std::size_t i) {
    return "entry " + std::to_string(i) + " (" + m.entries[i].bundle_path.string() + ")";
}

} // namespace

std::string_view to_string(Split split) { return split == Split::train ? "train" : "test"; }

DatasetManifest read_manifest(const std::filesystem::path& path, Split split, std::string category) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open manifest " + path.string());
    }
    DatasetManifest m;
    m.split = split;
    m.category = std::move(category);
    const auto base = path.parent_path();
    auto resolve = [&](const std::string& p) {
        std::filesystem::path fp(p);
        return fp.is_absolute() ? fp : base / fp;
    };

    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        if (line.empty() || line.front() == '#') {
            continue;
        }
        const auto fields = split_tabs(line);
        const auto where = path.string() + ":" + std::to_string(lineno);
        if (fields.size() < 2 || fields.size() > 3 || fields[0].empty()) {
            throw FormatError(where + ": expected bundle_path<TAB>label[<TAB>mask_path]");
        }
        ManifestEntry e;
        e.bundle_path = resolve(fields[0]);
        if (fields[1] == "normal") {
            e.label = Label::normal;
        } else if (fields[1] == "anomalous") {
            e.label = Label::anomalous;
        } else {
            throw FormatError(where + ": label must be normal or anomalous, got \"" + fields[1] + "\"");
        }
        if (fields.size() == 3 && !fields[2].empty()) {
            e.mask_path = resolve(fields[2]);
        }
        m.entries.push_back(std::move(e));
    }
    return m;
}

void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
    binio::write_atomically(path, [&](std::ostream& out) {
        out << "# split: " << to_string(manifest.split) << '\n';
        if (!manifest.category.empty()) {
            out << "# category: " << manifest.category << '\n';
        }
        for (const auto& e : manifest.entries) {
            if (e.label == Label::unknown) {
                throw ValidationError("manifest labels must be normal or anomalous");
            }
            out << e.bundle_path.generic_string() << '\t' << to_string(e.label);
            if (e.mask_path) {
                out << '\t' << e.mask_path->generic_string();
            }
            out << '\n';
        }
    });
}

std::vector<ManifestViolation> validate_manifest(const DatasetManifest& manifest) {
    std::vector<ManifestViolation> out;
    if (manifest.entries.empty()) {
        out.push_back({"manifest has no entries", {}});
        return out;
    }

    std::optional<std::size_t> reference;
    std::vector<std::vector<std::size_t>> reference_dims;

    for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
        const auto& e = manifest.entries[i];
        if (manifest.split == Split::train && e.label != Label::normal) {
            out.push_back({"train split must be normal-only: " + entry_name(manifest, i) + " is " +
                               std::string(to_string(e.label)),
                           {i}});
        }
        if (manifest.split == Split::test && e.label == Label::anomalous && !e.mask_path) {
            out.push_back({entry_name(manifest, i) + " is anomalous but has no mask_path", {i}});
        }
        if (e.mask_path && !std::filesystem::is_regular_file(*e.mask_path)) {
            out.push_back({entry_name(manifest, i) + ": mask " + e.mask_path->string() + " does not exist", {i}});
        }

        std::error_code ec;
        if (!std::filesystem::is_regular_file(e.bundle_path, ec)) {
            out.push_back({entry_name(manifest, i) + ": bundle does not exist", {i}});
            continue;
        }
        BundleHeader header;
        try {
            header = read_bundle_header(e.bundle_path);
        } catch (const std::exception& ex) {
            out.push_back({entry_name(manifest, i) + ": unreadable bundle: " + ex.what(), {i}});
            continue;
        }
        if (!reference) {
            reference = i;
            reference_dims = header.layer_dims;
            continue;
        }
        const std::size_t r = *reference;
        if (header.layer_dims.size() != reference_dims.size()) {
            out.push_back({entry_name(manifest, r) + " and " + entry_name(manifest, i) +
                               " have different layer counts: " + std::to_string(reference_dims.size()) +
                               " vs " + std::to_string(header.layer_dims.size()),
                           {r, i}});
            continue;
        }
        for (std::size_t l = 0; l < reference_dims.size(); ++l) {
            const auto& a = reference_dims[l];
            const auto& b = header.layer_dims[l];
            if (a[0] != b[0]) {
                out.push_back({entry_name(manifest, r) + " and " + entry_name(manifest, i) +
                                   " disagree on C_" + std::to_string(l + 1) + ": " + std::to_string(a[0]) +
                                   " vs " + std::to_string(b[0]),
                               {r, i}});
            } else if (a[1] != b[1] || a[2] != b[2]) {
                out.push_back({entry_name(manifest, r) + " and " + entry_name(manifest, i) +
                                   " disagree on layer " + std::to_string(l + 1) + " spatial size: " +
                                   format_dims(a) + " vs " + format_dims(b),
                               {r, i}});
            }
        }
    }
    return out;
}

std::string describe(const ManifestViolation& v) { return v.message; }

} // namespace lwinnn
