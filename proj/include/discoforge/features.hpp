#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "discoforge/corpus.hpp"
#include "discoforge/errors.hpp"
#include "discoforge/text.hpp"

namespace discoforge {

enum class TriState { False, True, Unknown };

inline std::string_view tri_str(TriState t) {
    switch (t) {
        case TriState::False: return "false";
        case TriState::True: return "true";
        case TriState::Unknown: return "unknown";
    }
    return "unknown";
}

// The hand-crafted per-instance features plus the corpus identity they are
// conditioned on. children_* are absent when no unit inventory exists for
// the document; same_speaker is unknown when speaker annotation is missing.
struct FeatureVector {
    CorpusId lcf;
    std::string genre = "unknown";
    std::optional<int> children_u1;
    std::optional<int> children_u2;
    bool discontinuous_u1 = false;
    bool discontinuous_u2 = false;
    bool is_sentence_u1 = false;
    bool is_sentence_u2 = false;
    double length_ratio = 0.0;  // tokens(u1) / tokens(u2)
    TriState same_speaker = TriState::Unknown;
    int doc_length = 0;
    double position = 0.0;  // in [0,1]
    int distance = 0;
    int lexical_overlap = 0;
};

// The sentence window around an instance: the sentence before the first
// argument, the sentence(s) covering both arguments, and the sentence after
// the second argument. pre/post are empty at document boundaries.
struct ContextWindow {
    std::string pre;
    std::string focal;
    std::string post;
};

// ---------------------------------------------------------------------------
// Per-document unit inventory
// ---------------------------------------------------------------------------

// Distinct argument spans of a document's rows, ordered by position. Also
// counts, per span, how many rows point at it (the row's head is unit2 for
// 1>2 and unit1 for 1<2), which is what the children features report.
struct UnitInventory {
    std::vector<TokenSpanSet> units;                    // sorted by (first, last)
    std::unordered_map<std::string, int> unit_pos;      // span render -> index in units
    std::unordered_map<std::string, int> head_count;

    static UnitInventory build(const std::vector<const RelationInstance*>& doc_rows) {
        UnitInventory inv;
        for (const auto* row : doc_rows) {
            for (const auto* span : {&row->unit1_spans, &row->unit2_spans}) {
                std::string key = span->str();
                if (!inv.unit_pos.count(key)) {
                    inv.unit_pos.emplace(std::move(key), 0);  // index assigned after sort
                    inv.units.push_back(*span);
                }
            }
            const TokenSpanSet& head =
                row->direction == Direction::Forward ? row->unit2_spans : row->unit1_spans;
            inv.head_count[head.str()] += 1;
        }
        std::sort(inv.units.begin(), inv.units.end(), [](const TokenSpanSet& a, const TokenSpanSet& b) {
            if (a.first_token() != b.first_token()) return a.first_token() < b.first_token();
            return a.last_token() < b.last_token();
        });
        for (std::size_t i = 0; i < inv.units.size(); ++i)
            inv.unit_pos[inv.units[i].str()] = static_cast<int>(i);
        return inv;
    }

    bool empty() const { return units.empty(); }

    std::optional<int> position_of(const TokenSpanSet& span) const {
        auto it = unit_pos.find(span.str());
        if (it == unit_pos.end()) return std::nullopt;
        return it->second;
    }

    int children_of(const TokenSpanSet& span) const {
        auto it = head_count.find(span.str());
        return it == head_count.end() ? 0 : it->second;
    }
};

// ---------------------------------------------------------------------------
// Sentence location helpers
// ---------------------------------------------------------------------------

inline std::optional<std::size_t> sentence_containing(const DocumentModel& doc, int token) {
    auto ranges = doc.sentence_token_ranges();
    for (std::size_t i = 0; i < ranges.size(); ++i)
        if (token >= ranges[i].first && token <= ranges[i].second) return i;
    return std::nullopt;
}

inline std::optional<std::size_t> sentence_matching_text(const DocumentModel& doc,
                                                         std::string_view text) {
    std::string norm = collapse_ws(text);
    if (norm.empty()) return std::nullopt;
    for (std::size_t i = 0; i < doc.sentences.size(); ++i)
        if (doc.sentence_text(i) == norm) return i;
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Feature computation
// ---------------------------------------------------------------------------

namespace detail {

// Fallback distance for degenerate inventories: sentence boundaries strictly
// between the earlier unit's end and the later unit's start.
inline int sentence_boundary_distance(const RelationInstance& inst, const DocumentModel& doc) {
    if (doc.sentences.empty()) return 0;
    int a_end = std::min(inst.unit1_spans.last_token(), inst.unit2_spans.last_token());
    int b_start = std::max(inst.unit1_spans.first_token(), inst.unit2_spans.first_token());
    if (b_start <= a_end) return 0;  // overlapping or nested units
    int boundaries = 0;
    for (const auto& [first, last] : doc.sentence_token_ranges())
        if (last >= a_end && last < b_start) ++boundaries;
    return boundaries;
}

inline bool unit_is_sentence(const TokenSpanSet& unit_spans,
                             const std::optional<TokenSpanSet>& sent_spans,
                             std::string_view unit_text, std::string_view sent_text) {
    if (sent_spans) return unit_spans == *sent_spans;
    if (trim(sent_text).empty()) return false;
    return collapse_ws(unit_text) == collapse_ws(sent_text);
}

}  // namespace detail

// Pure function: every field of the result is determined by the arguments.
// `units` may be null (or empty) for corpora where no per-document unit
// inventory can be built; children are then absent and distance falls back
// to counting sentence boundaries between the arguments.
inline FeatureVector compute_features(const RelationInstance& inst, const DocumentModel& doc,
                                      const CorpusId& corpus, const UnitInventory* units,
                                      const std::set<std::string>& stoplist) {
    if (inst.doc_id != doc.doc_id) throw DocMismatchError(inst.doc_id, doc.doc_id);

    FeatureVector fv;
    fv.lcf = corpus;
    fv.genre = doc.genre;

    if (units && !units->empty()) {
        fv.children_u1 = units->children_of(inst.unit1_spans);
        fv.children_u2 = units->children_of(inst.unit2_spans);
    }

    fv.discontinuous_u1 = inst.unit1_spans.discontinuous();
    fv.discontinuous_u2 = inst.unit2_spans.discontinuous();

    fv.is_sentence_u1 =
        detail::unit_is_sentence(inst.unit1_spans, inst.sent1_spans, inst.unit1_text, inst.sent1_text);
    fv.is_sentence_u2 =
        detail::unit_is_sentence(inst.unit2_spans, inst.sent2_spans, inst.unit2_text, inst.sent2_text);

    int u1_tokens = inst.unit1_spans.token_count();
    int u2_tokens = inst.unit2_spans.token_count();
    fv.length_ratio = u2_tokens > 0 ? static_cast<double>(u1_tokens) / u2_tokens : 0.0;

    fv.same_speaker = TriState::Unknown;
    if (doc.has_speakers()) {
        auto s1 = sentence_containing(doc, inst.unit1_spans.first_token());
        auto s2 = sentence_containing(doc, inst.unit2_spans.first_token());
        if (s1 && s2) {
            const auto& sp1 = doc.sentences[*s1].speaker;
            const auto& sp2 = doc.sentences[*s2].speaker;
            if (sp1 && sp2) fv.same_speaker = (*sp1 == *sp2) ? TriState::True : TriState::False;
        }
    }

    fv.doc_length = doc.token_count;

    double pos = doc.token_count > 0
                     ? static_cast<double>(inst.unit1_spans.first_token() - 1) / doc.token_count
                     : 0.0;
    fv.position = std::clamp(pos, 0.0, 1.0);

    std::optional<int> p1, p2;
    if (units && !units->empty()) {
        p1 = units->position_of(inst.unit1_spans);
        p2 = units->position_of(inst.unit2_spans);
    }
    if (p1 && p2) {
        int gap = std::abs(*p1 - *p2) - 1;
        fv.distance = std::max(0, gap);
    } else {
        fv.distance = detail::sentence_boundary_distance(inst, doc);
    }

    auto t1 = word_types(inst.unit1_text, stoplist);
    auto t2 = word_types(inst.unit2_text, stoplist);
    int shared = 0;
    for (const auto& w : t1)
        if (t2.count(w)) ++shared;
    fv.lexical_overlap = shared;

    return fv;
}

// ---------------------------------------------------------------------------
// Pseudo-directional markers
// ---------------------------------------------------------------------------

// Wraps the first argument in direction markers: "} ... >" for 1>2 and the
// mirrored "{ ... <" for 1<2. Stripping the outer marker tokens recovers the
// argument text exactly.
inline std::string mark_direction(std::string_view arg1_text, Direction dir) {
    if (arg1_text.empty()) throw Error("mark_direction: empty argument text");
    std::string out;
    out.reserve(arg1_text.size() + 4);
    out += (dir == Direction::Forward) ? "} " : "{ ";
    out += arg1_text;
    out += (dir == Direction::Forward) ? " >" : " <";
    return out;
}

// ---------------------------------------------------------------------------
// Context extraction
// ---------------------------------------------------------------------------

// Argument sentences are located by span containment first, then by exact
// (whitespace-normalized) sentence-text match. When neither locates them the
// window degrades to the instance's own sentence columns with a warning.
inline ContextWindow extract_context(const RelationInstance& inst, const DocumentModel& doc,
                                     Diagnostics* diag = nullptr) {
    auto locate = [&](const TokenSpanSet& spans, int token,
                      std::string_view sent_text) -> std::optional<std::size_t> {
        (void)spans;
        if (auto s = sentence_containing(doc, token)) return s;
        return sentence_matching_text(doc, sent_text);
    };

    auto s1 = locate(inst.unit1_spans, inst.unit1_spans.first_token(), inst.sent1_text);
    auto s2 = locate(inst.unit2_spans, inst.unit2_spans.last_token(), inst.sent2_text);

    ContextWindow ctx;
    if (!s1 || !s2) {
        if (diag)
            diag->warn("doc " + doc.doc_id + " instance " + std::to_string(inst.instance_id) +
                       ": argument sentence not found, using degraded context");
        std::string a = collapse_ws(inst.sent1_text);
        std::string b = collapse_ws(inst.sent2_text);
        if (a == b) b.clear();
        ctx.focal = a;
        if (!b.empty()) {
            if (!ctx.focal.empty()) ctx.focal += ' ';
            ctx.focal += b;
        }
        return ctx;
    }

    std::size_t lo = std::min(*s1, *s2);
    std::size_t hi = std::max(*s1, *s2);
    if (lo > 0) ctx.pre = doc.sentence_text(lo - 1);
    std::vector<std::string> focal;
    for (std::size_t i = lo; i <= hi; ++i) focal.push_back(doc.sentence_text(i));
    ctx.focal = join(focal, " ");
    if (hi + 1 < doc.sentences.size()) ctx.post = doc.sentence_text(hi + 1);
    return ctx;
}

// ---------------------------------------------------------------------------
// Stoplists
// ---------------------------------------------------------------------------

// One token per line, UTF-8; '#' comments. Tokens are case-folded.
inline std::set<std::string> load_stoplist(const fs::path& path) {
    std::set<std::string> out;
    for (const auto& line : split_lines(read_file(path))) {
        std::string_view t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        out.insert(to_lower_ascii(t));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Feature table output
// ---------------------------------------------------------------------------

inline const std::vector<std::string>& feature_tsv_header() {
    static const std::vector<std::string> h = {
        "corpus",           "doc",
        "instance_id",      "direction",
        "label",            "genre",
        "children_u1",      "children_u2",
        "discontinuous_u1", "discontinuous_u2",
        "is_sentence_u1",   "is_sentence_u2",
        "length_ratio",     "same_speaker",
        "doc_length",       "position",
        "distance",         "lexical_overlap"};
    return h;
}

inline std::string feature_tsv_row(const RelationInstance& inst, const FeatureVector& fv) {
    auto opt_int = [](const std::optional<int>& v) { return v ? std::to_string(*v) : std::string(); };
    auto b = [](bool v) { return v ? "true" : "false"; };
    std::vector<std::string> fields = {
        fv.lcf.str(),
        sanitize_tsv_field(inst.doc_id),
        std::to_string(inst.instance_id),
        std::string(direction_str(inst.direction)),
        inst.label,
        sanitize_tsv_field(fv.genre),
        opt_int(fv.children_u1),
        opt_int(fv.children_u2),
        b(fv.discontinuous_u1),
        b(fv.discontinuous_u2),
        b(fv.is_sentence_u1),
        b(fv.is_sentence_u2),
        format_double(fv.length_ratio),
        std::string(tri_str(fv.same_speaker)),
        std::to_string(fv.doc_length),
        format_double(fv.position),
        std::to_string(fv.distance),
        std::to_string(fv.lexical_overlap)};
    return join(fields, "\t");
}

}  // namespace discoforge
