#include "mug/features.hpp"

#include <cmath>
#include <limits>

#include "mug/binary_io.hpp"

namespace mug::data {

std::vector<std::uint8_t> encode_features(const Tensor& values) {
    if (values.rank() != 2) throw ShapeError("feature tensor must be [T, D], got " + shape_string(values.shape()));
    constexpr auto kMax = std::numeric_limits<std::uint32_t>::max();
    if (values.dim(0) == 0 || values.dim(1) == 0 || values.dim(0) > kMax || values.dim(1) > kMax) {
        throw ShapeError("feature tensor dims out of range: " + shape_string(values.shape()));
    }
    io::ByteWriter w;
    w.raw("AVMF");
    w.u32(kFeatureVersion);
    w.u32(static_cast<std::uint32_t>(values.dim(0)));
    w.u32(static_cast<std::uint32_t>(values.dim(1)));
    for (double v : values.data()) w.f32(static_cast<float>(v));
    return w.take();
}

Tensor decode_features(const std::vector<std::uint8_t>& bytes) {
    io::ByteReader r(bytes);
    if (r.raw(4, "magic") != "AVMF") throw FormatError("feature file: bad magic");
    const std::uint32_t version = r.u32("version");
    if (version != kFeatureVersion) throw FormatError("feature file: unsupported version " + std::to_string(version));
    const std::uint32_t T = r.u32("T");
    const std::uint32_t D = r.u32("D");
    if (T == 0) throw FormatError("feature file: zero dimension T");
    if (D == 0) throw FormatError("feature file: zero dimension D");
    const std::size_t count = static_cast<std::size_t>(T) * D;
    if (r.remaining() < count * 4) throw FormatError("feature file: truncated payload");
    if (r.remaining() > count * 4) throw FormatError("feature file: trailing bytes after payload");
    std::vector<double> values(count);
    for (double& v : values) {
        v = r.f32("payload");
        if (!std::isfinite(v)) throw FormatError("feature file: non-finite payload value");
    }
    return Tensor::from_vector({T, D}, std::move(values));
}

Tensor read_feature_file(const std::filesystem::path& path) {
    try {
        return decode_features(io::read_file_bytes(path.string()));
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

void write_feature_file(const std::filesystem::path& path, const Tensor& values) {
    io::write_file_bytes(path.string(), encode_features(values));
}

}  // namespace mug::data
