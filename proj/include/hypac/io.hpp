#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "hypac/ball.hpp"
#include "hypac/field.hpp"
#include "hypac/group.hpp"

namespace hypac {

using json = nlohmann::json;

inline std::uint64_t fnv1a64(const void* data, std::size_t n,
                             std::uint64_t h = 14695981039346656037ULL) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = digits[v & 0xf];
    return s;
}

inline json group_to_json(const GroupSpec& spec) {
    if (spec.backend() == GroupBackend::free_group)
        return json{{"kind", "free"}, {"rank", spec.rank()}};
    return json{{"kind", "free_product"}, {"orders", spec.orders()}};
}

inline GroupSpec group_from_json(const json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "free") return GroupSpec::free_group(j.at("rank").get<int>());
    if (kind == "free_product")
        return GroupSpec::free_product(j.at("orders").get<std::vector<int>>());
    throw std::invalid_argument("unknown group kind '" + kind + "'");
}

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string s((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return s;
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw std::runtime_error("short write to " + path);
}

// ---------------------------------------------------------------------------
// Field artifact: "ACF1" | u32 little-endian header length | JSON header |
// payload. The payload is the value array as little-endian doubles followed
// by the frozen mask packed LSB-first, and the header records its checksum.

namespace detail {

inline bool host_little_endian() {
    const std::uint32_t probe = 1;
    unsigned char b;
    std::memcpy(&b, &probe, 1);
    return b == 1;
}

inline void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

} // namespace detail

inline std::string field_payload(const ScalarField& f) {
    if (!detail::host_little_endian())
        throw std::runtime_error("field artifacts require a little-endian host");
    std::string payload;
    payload.reserve(f.size() * sizeof(double) + f.size() / 8 + 8);
    for (std::uint32_t g = 0; g < f.size(); ++g) {
        char buf[sizeof(double)];
        std::memcpy(buf, &f.values[g], sizeof(double));
        payload.append(buf, sizeof(double));
    }
    unsigned char acc = 0;
    for (std::uint32_t g = 0; g < f.size(); ++g) {
        if (f.frozen.test(g)) acc |= static_cast<unsigned char>(1u << (g & 7));
        if ((g & 7) == 7) {
            payload.push_back(static_cast<char>(acc));
            acc = 0;
        }
    }
    if (f.size() % 8 != 0) payload.push_back(static_cast<char>(acc));
    return payload;
}

inline void write_field(const std::string& path, const ScalarField& f, json extra = json::object()) {
    const CayleyBall& ball = *f.ball;
    std::string payload = field_payload(f);
    json header = std::move(extra);
    header["format"] = "ACF1";
    header["group"] = group_to_json(ball.spec());
    header["radius"] = ball.radius();
    header["count"] = f.size();
    header["rho"] = f.rho;
    header["ball_hash"] = hex64(ball.content_hash());
    header["payload_fnv"] = hex64(fnv1a64(payload.data(), payload.size()));
    std::string head = header.dump();
    std::string out;
    out.reserve(8 + head.size() + payload.size());
    out += "ACF1";
    detail::put_u32(out, static_cast<std::uint32_t>(head.size()));
    out += head;
    out += payload;
    write_text_file(path, out);
}

namespace detail {

inline std::uint32_t frame_header_len(const std::string& raw, const std::string& path) {
    if (raw.size() < 8 || raw.compare(0, 4, "ACF1") != 0)
        throw std::runtime_error(path + ": not a field artifact");
    std::uint32_t hlen = 0;
    for (int i = 3; i >= 0; --i)
        hlen = (hlen << 8) | static_cast<unsigned char>(raw[4 + static_cast<std::size_t>(i)]);
    if (8 + static_cast<std::size_t>(hlen) > raw.size())
        throw std::runtime_error(path + ": truncated header");
    return hlen;
}

} // namespace detail

inline json read_field_header(const std::string& raw, const std::string& path) {
    return json::parse(raw.substr(8, detail::frame_header_len(raw, path)));
}

struct FieldArtifact {
    json header;
    std::unique_ptr<CayleyBall> ball;
    ScalarField field;
};

inline FieldArtifact load_field(const std::string& path) {
    if (!detail::host_little_endian())
        throw std::runtime_error("field artifacts require a little-endian host");
    std::string raw = read_text_file(path);
    json header = read_field_header(raw, path);
    const std::string payload = raw.substr(8 + detail::frame_header_len(raw, path));

    const std::uint64_t want =
        std::stoull(header.at("payload_fnv").get<std::string>(), nullptr, 16);
    const std::uint64_t got = fnv1a64(payload.data(), payload.size());
    if (want != got)
        throw std::runtime_error(path + ": checksum mismatch (stored " +
                                 header.at("payload_fnv").get<std::string>() + ", computed " +
                                 hex64(got) + ")");

    FieldArtifact art;
    art.header = header;
    GroupSpec spec = group_from_json(header.at("group"));
    const int radius = header.at("radius").get<int>();
    const std::uint32_t count = header.at("count").get<std::uint32_t>();
    art.ball = std::make_unique<CayleyBall>(spec, radius, count);
    if (art.ball->size() != count)
        throw std::runtime_error(path + ": site count " + std::to_string(count) +
                                 " does not match the rebuilt ball (" +
                                 std::to_string(art.ball->size()) + ")");
    if (hex64(art.ball->content_hash()) != header.at("ball_hash").get<std::string>())
        throw std::runtime_error(path + ": ball hash mismatch");
    const std::size_t mask_bytes = (count + 7) / 8;
    if (payload.size() != count * sizeof(double) + mask_bytes)
        throw std::runtime_error(path + ": payload size mismatch");

    art.field = ScalarField(*art.ball, header.at("rho").get<double>(), 0.0);
    for (std::uint32_t g = 0; g < count; ++g)
        std::memcpy(&art.field.values[g], payload.data() + g * sizeof(double), sizeof(double));
    const auto* mask = reinterpret_cast<const unsigned char*>(payload.data() + count * sizeof(double));
    for (std::uint32_t g = 0; g < count; ++g)
        if ((mask[g >> 3] >> (g & 7)) & 1u) art.field.frozen.set(g);
    return art;
}

// ---------------------------------------------------------------------------
// CSV emission. Numeric cells use round-trip formatting; text cells in our
// tables never need quoting.

inline std::string csv_num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

class CsvWriter {
public:
    CsvWriter(const std::string& path, const std::vector<std::string>& header) : out_(path) {
        if (!out_) throw std::runtime_error("cannot write " + path);
        row(header);
    }
    void row(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ << ',';
            out_ << cells[i];
        }
        out_ << '\n';
    }

private:
    std::ofstream out_;
};

} // namespace hypac
