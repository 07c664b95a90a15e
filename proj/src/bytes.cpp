#include "iotid/bytes.hpp"

#include <fstream>

#include "iotid/errors.hpp"

namespace iotid {

Bytes read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IoFailure("cannot open for reading: " + path);
    f.seekg(0, std::ios::end);
    auto len = f.tellg();
    if (len < 0) throw IoFailure("cannot determine size of: " + path);
    f.seekg(0, std::ios::beg);
    Bytes data(static_cast<std::size_t>(len));
    if (len > 0) f.read(reinterpret_cast<char*>(data.data()), len);
    if (!f) throw IoFailure("short read on: " + path);
    return data;
}

void write_file(const std::string& path, const Bytes& data) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw IoFailure("cannot open for writing: " + path);
    if (!data.empty()) f.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
    f.flush();
    if (!f) throw IoFailure("short write on: " + path);
}

}  // namespace iotid
