#include "mug/checkpoint.hpp"

#include <fstream>
#include <iterator>
#include <unordered_map>

#include "mug/binary_io.hpp"

namespace mug {

namespace io {

std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open file '" + path + "'");
    return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), {});
}

void write_file_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot write file '" + path + "'");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw FormatError("short write to '" + path + "'");
}

}  // namespace io

std::vector<std::uint8_t> encode_checkpoint(const std::vector<NamedTensor>& tensors) {
    io::ByteWriter w;
    w.raw("MUGC");
    w.u32(kCheckpointVersion);
    w.u32(static_cast<std::uint32_t>(tensors.size()));
    for (const auto& [name, t] : tensors) {
        w.u32(static_cast<std::uint32_t>(name.size()));
        w.raw(name);
        w.u32(static_cast<std::uint32_t>(t.rank()));
        for (std::size_t d : t.shape()) w.u32(static_cast<std::uint32_t>(d));
        for (double v : t.data()) w.f64(v);
    }
    return w.take();
}

std::vector<NamedTensor> decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
    io::ByteReader r(bytes);
    if (r.raw(4, "magic") != "MUGC") throw FormatError("checkpoint: bad magic");
    const std::uint32_t version = r.u32("version");
    if (version != kCheckpointVersion) throw FormatError("checkpoint: unsupported version " + std::to_string(version));
    const std::uint32_t count = r.u32("tensor count");
    std::vector<NamedTensor> out;
    out.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        const std::uint32_t len = r.u32("name length");
        std::string name = r.raw(len, "name");
        const std::uint32_t rank = r.u32("rank");
        if (rank == 0) throw FormatError("checkpoint: tensor '" + name + "' has rank 0");
        Shape shape(rank);
        for (auto& d : shape) {
            d = r.u32("dims");
            if (d == 0) throw FormatError("checkpoint: tensor '" + name + "' has a zero dimension");
        }
        const std::size_t n = shape_numel(shape);
        if (r.remaining() / 8 < n) throw FormatError("checkpoint: truncated payload for '" + name + "'");
        std::vector<double> values(n);
        for (double& v : values) v = r.f64("payload");
        out.push_back({std::move(name), Tensor::from_vector(std::move(shape), std::move(values))});
    }
    if (r.remaining() != 0) throw FormatError("checkpoint: trailing bytes after last tensor");
    return out;
}

void save_checkpoint(const std::filesystem::path& path, const std::vector<NamedTensor>& tensors) {
    io::write_file_bytes(path.string(), encode_checkpoint(tensors));
}

std::vector<NamedTensor> load_checkpoint(const std::filesystem::path& path) {
    return decode_checkpoint(io::read_file_bytes(path.string()));
}

void restore_into(const std::vector<NamedTensor>& saved, std::vector<NamedTensor>& params) {
    std::unordered_map<std::string, const Tensor*> by_name;
    for (const auto& nt : saved) by_name.emplace(nt.name, &nt.tensor);
    if (by_name.size() != params.size()) {
        throw LoadError("checkpoint holds " + std::to_string(by_name.size()) + " tensors, model expects " +
                        std::to_string(params.size()));
    }
    for (auto& [name, t] : params) {
        auto it = by_name.find(name);
        if (it == by_name.end()) throw LoadError("checkpoint is missing tensor '" + name + "'");
        if (it->second->shape() != t.shape()) {
            throw LoadError("shape mismatch for '" + name + "': checkpoint " + shape_string(it->second->shape()) +
                            ", model " + shape_string(t.shape()));
        }
        auto dst = t.mutable_data();
        const auto src = it->second->data();
        std::copy(src.begin(), src.end(), dst.begin());
    }
}

}  // namespace mug
