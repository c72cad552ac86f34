#include "gia/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

namespace gia {

namespace {

constexpr char kMagic[8] = {'G', 'I', 'A', '_', 'C', 'K', 'P', '1'};

template <typename T>
void write_le(std::ostream& os, T v) {
    // Little-endian host assumed (x86/ARM); bytes go out in memory order.
    os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_le(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!is.good()) throw ParseError("checkpoint: truncated stream");
    return v;
}

} // namespace

void write_checkpoint(std::ostream& os, const ParamRefs& params) {
    os.write(kMagic, sizeof(kMagic));
    write_le<std::uint64_t>(os, params.size());
    for (const Parameter* p : params) {
        write_le<std::uint32_t>(os, static_cast<std::uint32_t>(p->name.size()));
        os.write(p->name.data(), static_cast<std::streamsize>(p->name.size()));
        const Shape& s = p->value.shape();
        write_le<std::uint32_t>(os, static_cast<std::uint32_t>(s.size()));
        for (std::size_t d : s) write_le<std::uint64_t>(os, d);
        os.write(reinterpret_cast<const char*>(p->value.data().data()),
                 static_cast<std::streamsize>(p->value.numel() * sizeof(double)));
    }
}

void save_checkpoint(const std::string& path, const ParamRefs& params) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw InputError("cannot open checkpoint for writing: " + path);
    write_checkpoint(f, params);
    if (!f.good()) throw InputError("failed writing checkpoint: " + path);
}

std::string checkpoint_bytes(const ParamRefs& params) {
    std::ostringstream os(std::ios::binary);
    write_checkpoint(os, params);
    return os.str();
}

std::vector<CheckpointRecord> read_checkpoint(std::istream& is) {
    char magic[8];
    is.read(magic, sizeof(magic));
    if (!is.good() || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw ParseError("checkpoint: bad magic header");
    }
    const std::uint64_t count = read_le<std::uint64_t>(is);
    std::vector<CheckpointRecord> records;
    records.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        CheckpointRecord r;
        const std::uint32_t name_len = read_le<std::uint32_t>(is);
        r.name.resize(name_len);
        is.read(r.name.data(), name_len);
        const std::uint32_t rank = read_le<std::uint32_t>(is);
        r.shape.resize(rank);
        std::size_t numel = 1;
        for (std::uint32_t d = 0; d < rank; ++d) {
            r.shape[d] = static_cast<std::size_t>(read_le<std::uint64_t>(is));
            numel *= r.shape[d];
        }
        r.data.resize(numel);
        is.read(reinterpret_cast<char*>(r.data.data()),
                static_cast<std::streamsize>(numel * sizeof(double)));
        if (!is.good()) throw ParseError("checkpoint: truncated record " + r.name);
        records.push_back(std::move(r));
    }
    return records;
}

std::vector<CheckpointRecord> read_checkpoint_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw InputError("cannot open checkpoint: " + path);
    return read_checkpoint(f);
}

void load_checkpoint(std::istream& is, const ParamRefs& params) {
    auto records = read_checkpoint(is);
    if (records.size() != params.size()) {
        throw ParseError("checkpoint: has " + std::to_string(records.size()) +
                         " records, model has " + std::to_string(params.size()) +
                         " parameters");
    }
    for (std::size_t i = 0; i < records.size(); ++i) {
        const CheckpointRecord& r = records[i];
        Parameter* p = params[i];
        if (r.name != p->name) {
            throw ParseError("checkpoint: record '" + r.name +
                             "' does not match parameter '" + p->name + "'");
        }
        if (r.shape != p->value.shape()) {
            throw ParseError("checkpoint: shape mismatch for '" + r.name + "': " +
                             shape_str(r.shape) + " vs " + shape_str(p->value.shape()));
        }
        p->value.data() = r.data;
    }
}

void load_checkpoint_file(const std::string& path, const ParamRefs& params) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw InputError("cannot open checkpoint: " + path);
    load_checkpoint(f, params);
}

std::vector<std::string> diff_checkpoints(const std::vector<CheckpointRecord>& a,
                                          const std::vector<CheckpointRecord>& b) {
    if (a.size() != b.size()) {
        throw ParseError("diff_checkpoints: record counts differ");
    }
    std::vector<std::string> changed;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].name != b[i].name) {
            throw ParseError("diff_checkpoints: record order differs at " + a[i].name);
        }
        if (a[i].data.size() != b[i].data.size() ||
            std::memcmp(a[i].data.data(), b[i].data.data(),
                        a[i].data.size() * sizeof(double)) != 0) {
            changed.push_back(a[i].name);
        }
    }
    return changed;
}

} // namespace gia
