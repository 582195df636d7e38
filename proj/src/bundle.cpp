#include "lwinnn/bundle.hpp"

#include "lwinnn/binary_io.hpp"
#include "lwinnn/errors.hpp"

#include <limits>

namespace lwinnn {

namespace {

constexpr binio::Magic kBundleMagic{'L', 'W', 'N', 'B'};
constexpr binio::Magic kMapMagic{'L', 'W', 'N', 'M'};

struct ContainerHeader {
    std::string image_id;
    std::uint32_t original_height = 0;
    std::uint32_t original_width = 0;
    Label label = Label::unknown;
};

void check_finite(const Tensor& t, std::size_t layer, const std::string& context) {
    const std::size_t bad = t.first_non_finite();
    if (bad != t.size()) {
        throw ValidationError(context + ": layer " + std::to_string(layer) +
                              " contains a non-finite value at flat index " + std::to_string(bad));
    }
}

Label label_from_byte(std::uint8_t b, const std::string& source) {
    if (b > 2) {
        throw FormatError(source + ": unknown label byte " + std::to_string(b));
    }
    return static_cast<Label>(b);
}

std::uint32_t narrow_u32(std::size_t v, const char* what) {
    if (v > std::numeric_limits<std::uint32_t>::max()) {
        throw ValidationError(std::string(what) + " exceeds u32 range");
    }
    return static_cast<std::uint32_t>(v);
}

// Both containers share this layout; only the magic and the layer rules differ.
void write_container(std::ostream& out, const binio::Magic& magic, const ContainerHeader& h,
                     const std::vector<Tensor>& layers) {
    binio::Writer w(out);
    w.magic(magic);
    w.u32(kBundleVersion);
    w.short_string(h.image_id);
    w.u32(h.original_height);
    w.u32(h.original_width);
    w.u8(static_cast<std::uint8_t>(h.label));
    w.u8(static_cast<std::uint8_t>(layers.size()));
    for (const Tensor& t : layers) {
        w.u32(narrow_u32(t.dim(0), "C"));
        w.u32(narrow_u32(t.dim(1), "H"));
        w.u32(narrow_u32(t.dim(2), "W"));
        w.floats(t.data());
    }
}

ContainerHeader read_container_header(binio::Reader& r, const binio::Magic& magic) {
    r.expect_magic(magic);
    const std::uint32_t version = r.u32();
    if (version != kBundleVersion) {
        throw FormatError(r.source() + ": unsupported format version " + std::to_string(version));
    }
    ContainerHeader h;
    h.image_id = r.short_string();
    h.original_height = r.u32();
    h.original_width = r.u32();
    h.label = label_from_byte(r.u8(), r.source());
    return h;
}

std::vector<std::size_t> read_layer_dims(binio::Reader& r) {
    std::vector<std::size_t> dims(3);
    for (auto& d : dims) {
        d = r.u32();
    }
    if (dims[0] == 0 || dims[1] == 0 || dims[2] == 0) {
        throw CorruptionError(r.source() + ": zero-sized layer dims " + format_dims(dims));
    }
    return dims;
}

std::vector<Tensor> read_layers(binio::Reader& r) {
    const std::uint8_t count = r.u8();
    std::vector<Tensor> layers;
    layers.reserve(count);
    for (std::uint8_t i = 0; i < count; ++i) {
        auto dims = read_layer_dims(r);
        Tensor t(dims);
        r.floats(t.data());
        check_finite(t, i, r.source());
        layers.push_back(std::move(t));
    }
    r.expect_end();
    return layers;
}

} // namespace

std::string_view to_string(Label label) {
    switch (label) {
    case Label::normal:
        return "normal";
    case Label::anomalous:
        return "anomalous";
    case Label::unknown:
        return "unknown";
    }
    return "unknown";
}

Label parse_label(std::string_view text) {
    if (text == "normal") {
        return Label::normal;
    }
    if (text == "anomalous") {
        return Label::anomalous;
    }
    if (text == "unknown") {
        return Label::unknown;
    }
    throw ValidationError("unknown label \"" + std::string(text) + "\"");
}

void validate_bundle(const FeatureBundle& bundle) {
    const std::string ctx = "bundle \"" + bundle.image_id + "\"";
    if (bundle.layers.empty()) {
        throw ValidationError(ctx + ": no layers");
    }
    if (bundle.layers.size() > 255) {
        throw ValidationError(ctx + ": more than 255 layers");
    }
    if (bundle.image_id.size() > 0xffff) {
        throw ValidationError(ctx + ": image_id longer than 65535 bytes");
    }
    if (bundle.original_height == 0 || bundle.original_width == 0) {
        throw ValidationError(ctx + ": original image size must be positive");
    }
    for (std::size_t i = 0; i < bundle.layers.size(); ++i) {
        const Tensor& t = bundle.layers[i];
        if (t.rank() != 3) {
            throw ValidationError(ctx + ": layer " + std::to_string(i) + " must be (C, H, W), got " +
                                  format_dims(t.dims()));
        }
        if (i > 0) {
            const Tensor& prev = bundle.layers[i - 1];
            if (t.dim(1) > prev.dim(1) || t.dim(2) > prev.dim(2)) {
                throw ValidationError(ctx + ": layer " + std::to_string(i) +
                                      " is spatially larger than layer " + std::to_string(i - 1));
            }
        }
        check_finite(t, i, ctx);
    }
}

FeatureBundle read_bundle(const std::filesystem::path& path) {
    auto in = binio::open_for_read(path);
    binio::Reader r(in, path.string());
    ContainerHeader h = read_container_header(r, kBundleMagic);
    FeatureBundle b;
    b.image_id = std::move(h.image_id);
    b.original_height = h.original_height;
    b.original_width = h.original_width;
    b.label = h.label;
    b.layers = read_layers(r);
    validate_bundle(b);
    return b;
}

BundleHeader read_bundle_header(const std::filesystem::path& path) {
    auto in = binio::open_for_read(path);
    binio::Reader r(in, path.string());
    ContainerHeader h = read_container_header(r, kBundleMagic);
    BundleHeader out;
    out.image_id = std::move(h.image_id);
    out.original_height = h.original_height;
    out.original_width = h.original_width;
    out.label = h.label;
    const std::uint8_t count = r.u8();
    for (std::uint8_t i = 0; i < count; ++i) {
        auto dims = read_layer_dims(r);
        const std::size_t bytes = element_count(dims) * sizeof(float);
        in.seekg(static_cast<std::streamoff>(bytes), std::ios::cur);
        if (!in) {
            throw CorruptionError(path.string() + ": payload shorter than declared dims");
        }
        out.layer_dims.push_back(std::move(dims));
    }
    return out;
}

void write_bundle(const FeatureBundle& bundle, const std::filesystem::path& path) {
    validate_bundle(bundle);
    binio::write_atomically(path, [&](std::ostream& out) {
        write_container(out, kBundleMagic,
                        {bundle.image_id, bundle.original_height, bundle.original_width, bundle.label},
                        bundle.layers);
    });
}

MapFile read_map_file(const std::filesystem::path& path) {
    auto in = binio::open_for_read(path);
    binio::Reader r(in, path.string());
    ContainerHeader h = read_container_header(r, kMapMagic);
    MapFile f;
    f.image_id = std::move(h.image_id);
    f.original_height = h.original_height;
    f.original_width = h.original_width;
    f.label = h.label;
    for (Tensor& layer : read_layers(r)) {
        if (layer.dim(0) != 1) {
            throw FormatError(path.string() + ": map layers must have a single channel");
        }
        f.maps.emplace_back(std::vector<std::size_t>{layer.dim(1), layer.dim(2)},
                            std::vector<float>(layer.values()));
    }
    return f;
}

void write_map_file(const MapFile& file, const std::filesystem::path& path) {
    if (file.maps.empty() || file.maps.size() > 255) {
        throw ValidationError("map file must hold between 1 and 255 maps");
    }
    std::vector<Tensor> layers;
    layers.reserve(file.maps.size());
    for (std::size_t i = 0; i < file.maps.size(); ++i) {
        const Tensor& m = file.maps[i];
        if (m.rank() != 2) {
            throw ValidationError("map " + std::to_string(i) + " must be rank 2");
        }
        check_finite(m, i, "map file \"" + file.image_id + "\"");
        layers.emplace_back(std::vector<std::size_t>{1, m.dim(0), m.dim(1)}, std::vector<float>(m.values()));
    }
    binio::write_atomically(path, [&](std::ostream& out) {
        write_container(out, kMapMagic, {file.image_id, file.original_height, file.original_width, file.label},
                        layers);
    });
}

} // namespace lwinnn
