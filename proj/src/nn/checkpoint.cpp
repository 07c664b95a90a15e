#include "iotid/nn/checkpoint.hpp"

#include <cstring>
#include <map>

#include "iotid/bytes.hpp"

namespace iotid::nn {

namespace {
constexpr char kMagic[4] = {'I', 'O', 'T', 'M'};
constexpr std::uint16_t kVersion = 1;

struct Reader {
    const Bytes& data;
    std::size_t off = 0;

    void need(std::size_t n) const {
        if (off + n > data.size()) throw CorruptFile("checkpoint ends mid-record");
    }
    std::uint8_t u8() {
        need(1);
        return data[off++];
    }
    std::uint16_t u16() {
        need(2);
        auto v = rd_u16le(&data[off]);
        off += 2;
        return v;
    }
    std::uint32_t u32() {
        need(4);
        auto v = rd_u32le(&data[off]);
        off += 4;
        return v;
    }
    double f64() {
        need(8);
        auto v = rd_f64le(&data[off]);
        off += 8;
        return v;
    }
    std::string str(std::size_t n) {
        need(n);
        std::string s(reinterpret_cast<const char*>(&data[off]), n);
        off += n;
        return s;
    }
};
}  // namespace

void write_checkpoint(const std::string& path, const std::string& arch,
                      const std::vector<const Param*>& params) {
    Bytes out;
    out.insert(out.end(), kMagic, kMagic + 4);
    wr_u16le(out, kVersion);
    wr_u16le(out, static_cast<std::uint16_t>(arch.size()));
    out.insert(out.end(), arch.begin(), arch.end());
    wr_u32le(out, static_cast<std::uint32_t>(params.size()));
    for (const auto* p : params) {
        wr_u16le(out, static_cast<std::uint16_t>(p->name.size()));
        out.insert(out.end(), p->name.begin(), p->name.end());
        out.push_back(static_cast<std::uint8_t>(p->value.shape.size()));
        for (auto d : p->value.shape) wr_u32le(out, static_cast<std::uint32_t>(d));
        for (double v : p->value.v) wr_f64le(out, v);
    }
    write_file(path, out);
}

Checkpoint read_checkpoint(const std::string& path) {
    Bytes data = read_file(path);
    if (data.size() < 6 || std::memcmp(data.data(), kMagic, 4) != 0)
        throw CorruptFile("not a model checkpoint: " + path);
    Reader r{data, 4};
    std::uint16_t version = r.u16();
    if (version != kVersion)
        throw VersionMismatch("checkpoint version " + std::to_string(version) + ", expected " +
                              std::to_string(kVersion));
    Checkpoint ck;
    ck.arch = r.str(r.u16());
    std::uint32_t count = r.u32();
    for (std::uint32_t i = 0; i < count; ++i) {
        std::string name = r.str(r.u16());
        std::uint8_t rank = r.u8();
        std::vector<std::size_t> shape;
        for (int d = 0; d < rank; ++d) shape.push_back(r.u32());
        Tensor t(shape);
        for (auto& v : t.v) v = r.f64();
        ck.tensors.emplace_back(std::move(name), std::move(t));
    }
    if (r.off != data.size()) throw CorruptFile("trailing bytes after checkpoint records");
    return ck;
}

void apply_checkpoint(const Checkpoint& ck, const std::vector<Param*>& params) {
    std::map<std::string, const Tensor*> by_name;
    for (const auto& [name, t] : ck.tensors) by_name[name] = &t;
    for (auto* p : params) {
        auto it = by_name.find(p->name);
        if (it == by_name.end()) throw CorruptFile("checkpoint misses tensor " + p->name);
        if (it->second->shape != p->value.shape)
            throw CorruptFile("checkpoint shape mismatch for " + p->name);
        p->value.v = it->second->v;
        p->grad.zero();
    }
}

}  // namespace iotid::nn
