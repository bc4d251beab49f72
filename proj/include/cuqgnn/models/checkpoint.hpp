#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "cuqgnn/models/model.hpp"

// Layout: a text manifest followed by a binary payload.
//
//   CUQGNN-CKPT v1
//   spec <key>=<value>              one line per ModelSpec field
//   param <name> <rows> <cols> <trainable 0|1>
//   end
//   <little-endian float64 values of every param, in manifest order>

namespace cuq {

inline constexpr int kCheckpointVersion = 1;
inline constexpr const char* kCheckpointMagic = "CUQGNN-CKPT";

namespace detail {

inline void write_le_double(std::ostream& os, double v) {
    auto bits = std::bit_cast<std::uint64_t>(v);
    char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xffu);
    os.write(bytes, 8);
}

inline double read_le_double(const unsigned char* bytes) {
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
    return std::bit_cast<double>(bits);
}

}  // namespace detail

inline void save_checkpoint(const Model& m, std::ostream& os) {
    os << kCheckpointMagic << " v" << kCheckpointVersion << '\n';
    for (const auto& [k, v] : m.spec.to_map()) os << "spec " << k << '=' << v << '\n';
    for (const Parameter& p : m.params) {
        os << "param " << p.name << ' ' << p.value.rows() << ' ' << p.value.cols() << ' ' << (p.trainable ? 1 : 0)
           << '\n';
    }
    os << "end\n";
    for (const Parameter& p : m.params)
        for (double v : p.value.data()) detail::write_le_double(os, v);
}

inline std::string checkpoint_bytes(const Model& m) {
    std::ostringstream os(std::ios::binary);
    save_checkpoint(m, os);
    return os.str();
}

inline void save_checkpoint(const Model& m, const std::filesystem::path& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw IntegrityError("cannot open checkpoint for writing: " + path.string());
    save_checkpoint(m, os);
    if (!os) throw IntegrityError("failed writing checkpoint: " + path.string());
}

inline Model load_checkpoint(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw IntegrityError("empty checkpoint");
    const std::string magic = std::string(kCheckpointMagic) + " v";
    if (line.rfind(magic, 0) != 0) throw IntegrityError("not a checkpoint file");
    const std::string version = line.substr(magic.size());
    if (version != std::to_string(kCheckpointVersion)) {
        throw FormatVersionError("checkpoint format v" + version + " is not supported (expected v" +
                                 std::to_string(kCheckpointVersion) + ")");
    }
    Model m;
    struct Entry {
        std::string name;
        std::size_t rows, cols;
        bool trainable;
    };
    std::vector<Entry> entries;
    bool ended = false;
    while (std::getline(is, line)) {
        if (line == "end") {
            ended = true;
            break;
        }
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        if (tag == "spec") {
            std::string kv;
            ls >> kv;
            const auto eq = kv.find('=');
            if (eq == std::string::npos) throw IntegrityError("malformed spec line: " + line);
            try {
                m.spec.set(kv.substr(0, eq), kv.substr(eq + 1));
            } catch (const ParameterError& e) {
                throw IntegrityError(std::string("bad spec entry: ") + e.what());
            }
        } else if (tag == "param") {
            Entry e{};
            int trainable = 0;
            if (!(ls >> e.name >> e.rows >> e.cols >> trainable)) throw IntegrityError("malformed param line: " + line);
            e.trainable = trainable != 0;
            entries.push_back(std::move(e));
        } else {
            throw IntegrityError("unexpected manifest line: " + line);
        }
    }
    if (!ended) throw IntegrityError("checkpoint manifest is truncated");

    std::size_t expected = 0;
    for (const Entry& e : entries) expected += e.rows * e.cols;
    const std::string payload{std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
    if (payload.size() != expected * 8) {
        throw IntegrityError("checkpoint payload has " + std::to_string(payload.size()) + " bytes, manifest needs " +
                             std::to_string(expected * 8));
    }
    const auto* bytes = reinterpret_cast<const unsigned char*>(payload.data());
    for (const Entry& e : entries) {
        Tensor t(e.rows, e.cols);
        for (std::size_t i = 0; i < t.size(); ++i, bytes += 8) t[i] = detail::read_le_double(bytes);
        m.params.add(e.name, std::move(t), e.trainable);
    }
    return m;
}

inline Model load_checkpoint(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IntegrityError("cannot open checkpoint: " + path.string());
    return load_checkpoint(is);
}

}  // namespace cuq
