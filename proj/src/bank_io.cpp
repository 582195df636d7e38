#include "lwinnn/bank_io.hpp"

#include "lwinnn/binary_io.hpp"
#include "lwinnn/errors.hpp"

namespace lwinnn {

namespace {

constexpr binio::Magic kBankMagic{'L', 'W', 'N', 'K'};

struct BankHeader {
    std::string category;
    std::string fingerprint;
};

BankHeader read_header(binio::Reader& r) {
    r.expect_magic(kBankMagic);
    const std::uint32_t version = r.u32();
    if (version != kBankVersion) {
        throw FormatError(r.source() + ": unsupported bank version " + std::to_string(version));
    }
    BankHeader h;
    h.category = r.short_string();
    h.fingerprint = r.short_string();
    return h;
}

} // namespace

void write_bank(const EmbeddingBank& bank, const std::filesystem::path& path) {
    if (bank.empty()) {
        throw ValidationError("refusing to write an empty bank");
    }
    if (!bank.tensor().all_finite()) {
        throw ValidationError("bank contains non-finite values");
    }
    binio::write_atomically(path, [&](std::ostream& out) {
        binio::Writer w(out);
        w.magic(kBankMagic);
        w.u32(kBankVersion);
        w.short_string(bank.category());
        w.short_string(bank.fingerprint());
        for (std::size_t d : bank.tensor().dims()) {
            w.u32(static_cast<std::uint32_t>(d));
        }
        w.floats(bank.tensor().data());
    });
}

EmbeddingBank read_bank(const std::filesystem::path& path) {
    auto in = binio::open_for_read(path);
    binio::Reader r(in, path.string());
    BankHeader h = read_header(r);
    std::vector<std::size_t> dims(4);
    for (auto& d : dims) {
        d = r.u32();
        if (d == 0) {
            throw CorruptionError(path.string() + ": zero-sized bank dims");
        }
    }
    Tensor stacked(dims);
    r.floats(stacked.data());
    r.expect_end();
    if (!stacked.all_finite()) {
        throw ValidationError(path.string() + ": bank contains non-finite values");
    }
    return EmbeddingBank(std::move(stacked), std::move(h.category), std::move(h.fingerprint));
}

std::string read_bank_fingerprint(const std::filesystem::path& path) {
    auto in = binio::open_for_read(path);
    binio::Reader r(in, path.string());
    return read_header(r).fingerprint;
}

} // namespace lwinnn
