#include "saia/text.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "saia/error.hpp"

namespace saia {

std::string_view error_kind_name(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::MalformedRow: return "MalformedRow";
        case ErrorKind::DuplicateId: return "DuplicateId";
        case ErrorKind::LabelOutOfRange: return "LabelOutOfRange";
        case ErrorKind::MixedLabels: return "MixedLabels";
        case ErrorKind::InvalidArgument: return "InvalidArgument";
        case ErrorKind::EmptyClass: return "EmptyClass";
        case ErrorKind::ObjectiveMismatch: return "ObjectiveMismatch";
        case ErrorKind::ArityMismatch: return "ArityMismatch";
        case ErrorKind::MalformedModel: return "MalformedModel";
        case ErrorKind::MissingPrediction: return "MissingPrediction";
        case ErrorKind::RowNotNormalized: return "RowNotNormalized";
        case ErrorKind::DuplicateKey: return "DuplicateKey";
        case ErrorKind::DegenerateLabels: return "DegenerateLabels";
        case ErrorKind::DegenerateHistogram: return "DegenerateHistogram";
        case ErrorKind::EmptyMask: return "EmptyMask";
        case ErrorKind::ImageTooSmall: return "ImageTooSmall";
        case ErrorKind::MalformedImage: return "MalformedImage";
        case ErrorKind::TransportFailure: return "TransportFailure";
        case ErrorKind::BindFailure: return "BindFailure";
        case ErrorKind::ProtocolError: return "ProtocolError";
        case ErrorKind::ConfigError: return "ConfigError";
        case ErrorKind::IoError: return "IoError";
    }
    return "Unknown";
}

std::string format_double(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, end);
}

std::optional<double> parse_double(std::string_view text) {
    if (text == "nan") return std::nan("");
    if (text.empty()) return std::nullopt;
    if (text.front() == '+') text.remove_prefix(1);
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size()) return std::nullopt;
    return value;
}

std::optional<long long> parse_int(std::string_view text) {
    if (text.empty()) return std::nullopt;
    long long value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size()) return std::nullopt;
    return value;
}

std::vector<std::string_view> split_csv_line(std::string_view line) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        auto comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
    return fields;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::IoError, "cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const std::string& path, std::string_view contents) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::IoError, "cannot write " + path);
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw Error(ErrorKind::IoError, "short write to " + path);
}

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t hash = 14695981039346656037ull;
    for (unsigned char c : bytes) {
        hash ^= c;
        hash *= 1099511628211ull;
    }
    return hash;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

}  // namespace saia
