#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <set>
#include <string>
#include <vector>

#include "discoforge/errors.hpp"
#include "discoforge/io.hpp"
#include "discoforge/text.hpp"

namespace discoforge {

// Input/output activations of one transformer layer over a calibration run:
// two equally shaped (token positions x hidden dim) matrices, row-major.
struct ActivationDump {
    int layer_index = 0;
    int rows = 0;
    int cols = 0;
    std::vector<float> hidden_in;
    std::vector<float> hidden_out;
};

struct LayerScore {
    int layer_index = 0;
    double influence = 0.0;  // 1 - mean per-token cosine(in, out), in [0, 2]
};

// How much a layer transforms its input: one minus the mean per-row cosine
// similarity between input and output representations. A layer that passes
// tokens through unchanged scores 0; one that negates them scores 2. Rows
// with zero norm on either side are skipped (and logged); a dump with no
// usable row is degenerate.
inline LayerScore block_influence(const ActivationDump& dump, Diagnostics* diag = nullptr) {
    if (dump.rows < 1 || dump.cols < 1)
        throw DumpFormatError("layer " + std::to_string(dump.layer_index) + ": empty dump");
    const std::size_t expected = static_cast<std::size_t>(dump.rows) * dump.cols;
    if (dump.hidden_in.size() != expected || dump.hidden_out.size() != expected)
        throw DumpFormatError("layer " + std::to_string(dump.layer_index) +
                              ": matrix sizes disagree with declared shape");

    double cosine_sum = 0.0;
    int usable = 0;
    for (int r = 0; r < dump.rows; ++r) {
        const float* a = dump.hidden_in.data() + static_cast<std::size_t>(r) * dump.cols;
        const float* b = dump.hidden_out.data() + static_cast<std::size_t>(r) * dump.cols;
        double dot = 0.0, na = 0.0, nb = 0.0;
        for (int c = 0; c < dump.cols; ++c) {
            double x = a[c], y = b[c];
            if (!std::isfinite(x) || !std::isfinite(y))
                throw DumpFormatError("layer " + std::to_string(dump.layer_index) + " row " +
                                      std::to_string(r) + ": non-finite value");
            dot += x * y;
            na += x * x;
            nb += y * y;
        }
        if (na == 0.0 || nb == 0.0) {
            if (diag)
                diag->warn("layer " + std::to_string(dump.layer_index) + " row " +
                           std::to_string(r) + ": zero norm, skipped");
            continue;
        }
        double cosine;
        if (dot * dot == na * nb) {
            // Cauchy-Schwarz equality: the rows are exactly colinear, so the
            // cosine is exactly +/-1 and need not go through sqrt rounding.
            cosine = dot > 0.0 ? 1.0 : -1.0;
        } else {
            cosine = dot / (std::sqrt(na) * std::sqrt(nb));
            cosine = std::clamp(cosine, -1.0, 1.0);
        }
        cosine_sum += cosine;
        ++usable;
    }
    if (usable == 0)
        throw DegenerateDumpError("layer " + std::to_string(dump.layer_index) +
                                  ": every row has zero norm");
    return LayerScore{dump.layer_index, 1.0 - cosine_sum / usable};
}

// The k lowest-influence layers outside the protected set, ordered by
// ascending influence with ties broken toward the lower layer index.
inline std::vector<int> select_prune_layers(const std::vector<LayerScore>& scores, int k,
                                            const std::set<int>& protected_layers) {
    if (k < 1) throw Error("select_prune_layers: k must be >= 1");
    std::vector<LayerScore> candidates;
    for (const auto& s : scores)
        if (!protected_layers.count(s.layer_index)) candidates.push_back(s);
    if (static_cast<int>(candidates.size()) < k ||
        static_cast<int>(scores.size()) <= k)
        throw NotEnoughCandidatesError("need " + std::to_string(k) + " prunable layers, have " +
                                       std::to_string(candidates.size()) + " candidates of " +
                                       std::to_string(scores.size()) + " scored layers");
    std::sort(candidates.begin(), candidates.end(), [](const LayerScore& a, const LayerScore& b) {
        if (a.influence != b.influence) return a.influence < b.influence;
        return a.layer_index < b.layer_index;
    });
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) out.push_back(candidates[static_cast<std::size_t>(i)].layer_index);
    return out;
}

// ---------------------------------------------------------------------------
// Dump manifests
// ---------------------------------------------------------------------------

// Manifest line: layer_index rows cols in_file out_file ('#' comments).
// Matrix files are raw little-endian float32, row-major, paths relative to
// the manifest.
struct DumpManifestEntry {
    int layer_index = 0;
    int rows = 0;
    int cols = 0;
    fs::path in_file;
    fs::path out_file;
};

inline std::vector<DumpManifestEntry> parse_dump_manifest(const fs::path& path) {
    std::vector<DumpManifestEntry> out;
    std::set<int> seen;
    std::size_t lineno = 0;
    for (const auto& line : split_lines(read_file(path))) {
        ++lineno;
        std::string_view t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        auto fields = tokenize_ws(t);
        if (fields.size() != 5)
            throw DumpFormatError(path.string() + ":" + std::to_string(lineno) +
                                  ": expected 'layer rows cols in_file out_file'");
        DumpManifestEntry e;
        if (!parse_int(fields[0], e.layer_index) || !parse_int(fields[1], e.rows) ||
            !parse_int(fields[2], e.cols) || e.layer_index < 0 || e.rows < 1 || e.cols < 1)
            throw DumpFormatError(path.string() + ":" + std::to_string(lineno) + ": bad numbers");
        if (!seen.insert(e.layer_index).second)
            throw DumpFormatError(path.string() + ":" + std::to_string(lineno) +
                                  ": duplicate layer index " + fields[0]);
        e.in_file = path.parent_path() / fields[3];
        e.out_file = path.parent_path() / fields[4];
        out.push_back(std::move(e));
    }
    return out;
}

namespace detail {

inline std::vector<float> read_f32le_matrix(const fs::path& path, int rows, int cols) {
    std::string bytes = read_file(path);
    const std::size_t expected = static_cast<std::size_t>(rows) * cols * 4;
    if (bytes.size() != expected)
        throw DumpFormatError(path.string() + ": expected " + std::to_string(expected) +
                              " bytes for a " + std::to_string(rows) + "x" + std::to_string(cols) +
                              " float32 matrix, got " + std::to_string(bytes.size()));
    std::vector<float> out(static_cast<std::size_t>(rows) * cols);
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
    for (std::size_t i = 0; i < out.size(); ++i, p += 4) {
        std::uint32_t bits = static_cast<std::uint32_t>(p[0]) |
                             (static_cast<std::uint32_t>(p[1]) << 8) |
                             (static_cast<std::uint32_t>(p[2]) << 16) |
                             (static_cast<std::uint32_t>(p[3]) << 24);
        float v;
        std::memcpy(&v, &bits, 4);
        out[i] = v;
    }
    return out;
}

}  // namespace detail

inline ActivationDump load_dump(const DumpManifestEntry& entry) {
    ActivationDump dump;
    dump.layer_index = entry.layer_index;
    dump.rows = entry.rows;
    dump.cols = entry.cols;
    dump.hidden_in = detail::read_f32le_matrix(entry.in_file, entry.rows, entry.cols);
    dump.hidden_out = detail::read_f32le_matrix(entry.out_file, entry.rows, entry.cols);
    return dump;
}

inline std::string write_f32le_matrix(const std::vector<float>& values) {
    std::string bytes(values.size() * 4, '\0');
    auto* p = reinterpret_cast<unsigned char*>(bytes.data());
    for (float v : values) {
        std::uint32_t bits;
        std::memcpy(&bits, &v, 4);
        *p++ = static_cast<unsigned char>(bits & 0xff);
        *p++ = static_cast<unsigned char>((bits >> 8) & 0xff);
        *p++ = static_cast<unsigned char>((bits >> 16) & 0xff);
        *p++ = static_cast<unsigned char>((bits >> 24) & 0xff);
    }
    return bytes;
}

}  // namespace discoforge
