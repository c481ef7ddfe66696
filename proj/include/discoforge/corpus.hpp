#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "discoforge/errors.hpp"
#include "discoforge/io.hpp"
#include "discoforge/text.hpp"

namespace discoforge {

// ---------------------------------------------------------------------------
// Corpus identity
// ---------------------------------------------------------------------------

enum class Framework { Rst, Pdtb, Sdrt, Dep, Erst, Iso };

inline std::string_view framework_name(Framework f) {
    switch (f) {
        case Framework::Rst: return "rst";
        case Framework::Pdtb: return "pdtb";
        case Framework::Sdrt: return "sdrt";
        case Framework::Dep: return "dep";
        case Framework::Erst: return "erst";
        case Framework::Iso: return "iso";
    }
    return "rst";
}

inline std::optional<Framework> framework_from(std::string_view s) {
    if (s == "rst") return Framework::Rst;
    if (s == "pdtb") return Framework::Pdtb;
    if (s == "sdrt") return Framework::Sdrt;
    if (s == "dep") return Framework::Dep;
    if (s == "erst") return Framework::Erst;
    if (s == "iso") return Framework::Iso;
    return std::nullopt;
}

// Identity of one dataset: language code, annotation framework, corpus short
// name, rendered as "language.framework.corpus" (e.g. "zho.rst.gcdt").
struct CorpusId {
    std::string language;  // ISO 639-3, lowercase
    Framework framework = Framework::Rst;
    std::string corpus;  // short name, lowercase

    static CorpusId parse(std::string_view text) {
        auto parts = split(text, '.');
        if (parts.size() != 3)
            throw ConfigError("corpus id '" + std::string(text) +
                              "' is not of the form language.framework.corpus");
        CorpusId id;
        id.language = to_lower_ascii(trim(parts[0]));
        id.corpus = to_lower_ascii(trim(parts[2]));
        auto fw = framework_from(to_lower_ascii(trim(parts[1])));
        if (!fw)
            throw ConfigError("corpus id '" + std::string(text) + "': unknown framework '" +
                              parts[1] + "'");
        id.framework = *fw;
        auto valid = [](const std::string& s, std::size_t min_len) {
            if (s.size() < min_len) return false;
            return std::all_of(s.begin(), s.end(),
                               [](char c) { return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9'); });
        };
        if (id.language.size() != 3 || !valid(id.language, 3))
            throw ConfigError("corpus id '" + std::string(text) +
                              "': language must be a three-letter ISO 639-3 code");
        if (!valid(id.corpus, 1))
            throw ConfigError("corpus id '" + std::string(text) + "': bad corpus name");
        return id;
    }

    std::string str() const {
        std::string out = language;
        out += '.';
        out += framework_name(framework);
        out += '.';
        out += corpus;
        return out;
    }

    friend bool operator==(const CorpusId& a, const CorpusId& b) {
        return a.language == b.language && a.framework == b.framework && a.corpus == b.corpus;
    }
    friend bool operator<(const CorpusId& a, const CorpusId& b) { return a.str() < b.str(); }
};

// ---------------------------------------------------------------------------
// Token spans
// ---------------------------------------------------------------------------

// Ordered, disjoint, inclusive 1-based token-index ranges within a document.
// Source syntax: comma-separated ranges, "5-7,9" -> {[5,7],[9,9]}.
struct TokenSpanSet {
    struct Range {
        int first = 0;
        int last = 0;
        friend bool operator==(const Range&, const Range&) = default;
    };

    std::vector<Range> ranges;

    static TokenSpanSet parse(std::string_view text) {
        TokenSpanSet out;
        for (const auto& piece : split(text, ',')) {
            std::string_view p = trim(piece);
            if (p.empty()) throw SpanSyntaxError("empty range in span '" + std::string(text) + "'");
            Range r;
            std::size_t dash = p.find('-');
            if (dash == std::string_view::npos) {
                if (!parse_int(p, r.first))
                    throw SpanSyntaxError("bad token index in span '" + std::string(text) + "'");
                r.last = r.first;
            } else {
                if (!parse_int(p.substr(0, dash), r.first) || !parse_int(p.substr(dash + 1), r.last))
                    throw SpanSyntaxError("bad range in span '" + std::string(text) + "'");
            }
            if (r.first < 1 || r.last < r.first)
                throw SpanSyntaxError("invalid range bounds in span '" + std::string(text) + "'");
            out.ranges.push_back(r);
        }
        out.canonicalize(text);
        return out;
    }

    // Canonical rendering: "a-b,c" with single-token ranges collapsed to "a".
    std::string str() const {
        std::string out;
        for (std::size_t i = 0; i < ranges.size(); ++i) {
            if (i) out += ',';
            out += std::to_string(ranges[i].first);
            if (ranges[i].last != ranges[i].first) {
                out += '-';
                out += std::to_string(ranges[i].last);
            }
        }
        return out;
    }

    bool empty() const { return ranges.empty(); }
    bool discontinuous() const { return ranges.size() > 1; }

    int token_count() const {
        int n = 0;
        for (const auto& r : ranges) n += r.last - r.first + 1;
        return n;
    }

    int first_token() const { return ranges.front().first; }
    int last_token() const { return ranges.back().last; }

    bool contains(int token) const {
        for (const auto& r : ranges)
            if (token >= r.first && token <= r.last) return true;
        return false;
    }

    friend bool operator==(const TokenSpanSet&, const TokenSpanSet&) = default;

private:
    // Sort, reject overlaps, and fuse ranges that abut ("5-7,8" -> "5-8") so
    // discontinuous() reflects actual token contiguity.
    void canonicalize(std::string_view source) {
        std::sort(ranges.begin(), ranges.end(),
                  [](const Range& a, const Range& b) { return a.first < b.first; });
        std::vector<Range> merged;
        for (const auto& r : ranges) {
            if (!merged.empty() && r.first <= merged.back().last)
                throw SpanSyntaxError("overlapping ranges in span '" + std::string(source) + "'");
            if (!merged.empty() && r.first == merged.back().last + 1)
                merged.back().last = r.last;
            else
                merged.push_back(r);
        }
        ranges = std::move(merged);
    }
};

// ---------------------------------------------------------------------------
// Relation instances
// ---------------------------------------------------------------------------

enum class Direction { Forward, Backward };  // "1>2" / "1<2"

inline std::string_view direction_str(Direction d) {
    return d == Direction::Forward ? "1>2" : "1<2";
}

inline std::optional<Direction> direction_from(std::string_view s) {
    if (s == "1>2") return Direction::Forward;
    if (s == "1<2") return Direction::Backward;
    return std::nullopt;
}

// One row of a .rels file.
struct RelationInstance {
    std::string doc_id;
    std::string unit1_text;
    std::string unit2_text;
    TokenSpanSet unit1_spans;
    TokenSpanSet unit2_spans;
    std::string sent1_text;
    std::string sent2_text;
    std::optional<TokenSpanSet> sent1_spans;
    std::optional<TokenSpanSet> sent2_spans;
    Direction direction = Direction::Forward;
    std::string label;  // case-folded
    std::optional<std::string> orig_label;
    int instance_id = 0;       // ordinal within the file, 0-based
    bool label_known = true;   // false when the label fell outside the inventory
};

struct Sentence {
    std::vector<std::string> tokens;
    std::optional<std::string> speaker;
};

struct DocumentModel {
    std::string doc_id;
    std::vector<Sentence> sentences;
    std::string genre = "unknown";
    int token_count = 0;

    // Document-wide inclusive 1-based token range of each sentence.
    std::vector<std::pair<int, int>> sentence_token_ranges() const {
        std::vector<std::pair<int, int>> out;
        out.reserve(sentences.size());
        int next = 1;
        for (const auto& s : sentences) {
            int n = static_cast<int>(s.tokens.size());
            out.emplace_back(next, next + n - 1);
            next += n;
        }
        return out;
    }

    std::string sentence_text(std::size_t i) const { return join(sentences[i].tokens, " "); }

    bool has_speakers() const {
        for (const auto& s : sentences)
            if (s.speaker) return true;
        return false;
    }
};

// ---------------------------------------------------------------------------
// Label inventory
// ---------------------------------------------------------------------------

// The unified relation label set, in canonical (file) order. Labels are
// stored case-folded; lookups fold and trim their argument.
struct LabelInventory {
    std::vector<std::string> labels;

    static LabelInventory from_labels(const std::vector<std::string>& raw) {
        LabelInventory inv;
        std::set<std::string> seen;
        for (const auto& l : raw) {
            std::string folded = to_lower_ascii(trim(l));
            if (folded.empty()) continue;
            if (!seen.insert(folded).second)
                throw ConfigError("duplicate label after case-folding: " + folded);
            inv.labels.push_back(std::move(folded));
        }
        if (inv.labels.empty()) throw ConfigError("label inventory is empty");
        return inv;
    }

    // One label per line; '#' starts a comment.
    static LabelInventory load(const fs::path& path) {
        std::vector<std::string> raw;
        for (const auto& line : split_lines(read_file(path))) {
            std::string_view t = trim(line);
            if (t.empty() || t.front() == '#') continue;
            raw.emplace_back(t);
        }
        try {
            return from_labels(raw);
        } catch (const ConfigError& e) {
            throw ConfigError(path.string() + ": " + e.what());
        }
    }

    std::size_t size() const { return labels.size(); }

    bool contains(std::string_view label) const {
        std::string folded = to_lower_ascii(trim(label));
        return std::find(labels.begin(), labels.end(), folded) != labels.end();
    }

    // Case-insensitive match to the stored form; nullopt when absent.
    std::optional<std::string> canonical(std::string_view label) const {
        std::string folded = to_lower_ascii(trim(label));
        auto it = std::find(labels.begin(), labels.end(), folded);
        if (it == labels.end()) return std::nullopt;
        return *it;
    }
};

// ---------------------------------------------------------------------------
// .rels parsing and serialization
// ---------------------------------------------------------------------------

namespace rels_columns {
inline constexpr const char* kDoc = "doc";
inline constexpr const char* kUnit1Toks = "unit1_toks";
inline constexpr const char* kUnit2Toks = "unit2_toks";
inline constexpr const char* kUnit1Txt = "unit1_txt";
inline constexpr const char* kUnit2Txt = "unit2_txt";
inline constexpr const char* kS1Toks = "s1_toks";
inline constexpr const char* kS2Toks = "s2_toks";
inline constexpr const char* kUnit1Sent = "unit1_sent";
inline constexpr const char* kUnit2Sent = "unit2_sent";
inline constexpr const char* kDir = "dir";
inline constexpr const char* kOrigLabel = "orig_label";
inline constexpr const char* kLabel = "label";

inline const std::vector<std::string>& standard_header() {
    static const std::vector<std::string> h = {kDoc,      kUnit1Toks, kUnit2Toks, kUnit1Txt,
                                               kUnit2Txt, kS1Toks,    kS2Toks,    kUnit1Sent,
                                               kUnit2Sent, kDir,      kOrigLabel, kLabel};
    return h;
}
}  // namespace rels_columns

struct RelsFile {
    std::vector<std::string> header;  // column order as found in the file
    std::vector<RelationInstance> instances;
};

// Column binding is by header name, so reordered or extra columns (newer
// releases add e.g. a relation-type column) parse fine. Required columns:
// doc, unit1_toks, unit2_toks, unit1_txt, unit2_txt, dir, label.
//
// With a Diagnostics sink, row-level problems are recorded and the row is
// skipped; without one the first such problem throws.
inline RelsFile parse_rels(const fs::path& path, const CorpusId& corpus,
                           const LabelInventory& inventory, Diagnostics* diag = nullptr) {
    (void)corpus;  // identity travels with the caller; kept for symmetry of the API
    std::string content = read_file(path);
    std::vector<std::string> lines = split_lines(content);
    if (!lines.empty() && lines.back().empty()) lines.pop_back();
    if (lines.empty()) throw RelsFormatError(path.string() + ": empty file, expected a header row");

    std::vector<std::string> header = split(lines[0], '\t');
    if (!header.empty()) {
        // Strip a UTF-8 BOM if the producer left one.
        if (header[0].rfind("\xEF\xBB\xBF", 0) == 0) header[0] = header[0].substr(3);
    }
    std::unordered_map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < header.size(); ++i) col.emplace(header[i], i);

    using namespace rels_columns;
    for (const char* required : {kDoc, kUnit1Toks, kUnit2Toks, kUnit1Txt, kUnit2Txt, kDir, kLabel})
        if (!col.count(required)) throw MissingColumnError(required);

    auto get = [&](const std::vector<std::string>& fields, const char* name) -> std::string_view {
        auto it = col.find(name);
        if (it == col.end() || it->second >= fields.size()) return {};
        return fields[it->second];
    };
    auto optional_text = [&](std::string_view v) -> std::string {
        return v == "_" ? std::string() : std::string(v);
    };

    RelsFile out;
    out.header = header;
    int ordinal = 0;
    for (std::size_t idx = 1; idx < lines.size(); ++idx) {
        const std::size_t lineno = idx + 1;
        const std::string& line = lines[idx];
        if (line.empty()) continue;
        std::vector<std::string> fields = split(line, '\t');

        // Generic parameter so rethrow keeps the concrete exception type.
        auto fail = [&](const auto& e) {
            if (!diag) throw e;
            diag->error(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
        };

        if (fields.size() < header.size()) {
            fail(RelsFormatError("row has " + std::to_string(fields.size()) + " fields, header has " +
                                 std::to_string(header.size())));
            continue;
        }

        RelationInstance inst;
        inst.doc_id = get(fields, kDoc);
        inst.unit1_text = get(fields, kUnit1Txt);
        inst.unit2_text = get(fields, kUnit2Txt);
        inst.sent1_text = optional_text(get(fields, kUnit1Sent));
        inst.sent2_text = optional_text(get(fields, kUnit2Sent));

        try {
            inst.unit1_spans = TokenSpanSet::parse(get(fields, kUnit1Toks));
            inst.unit2_spans = TokenSpanSet::parse(get(fields, kUnit2Toks));
            std::string_view s1 = get(fields, kS1Toks), s2 = get(fields, kS2Toks);
            if (!s1.empty() && s1 != "_") inst.sent1_spans = TokenSpanSet::parse(s1);
            if (!s2.empty() && s2 != "_") inst.sent2_spans = TokenSpanSet::parse(s2);
        } catch (const SpanSyntaxError& e) {
            fail(e);
            continue;
        }

        std::string_view dir = get(fields, kDir);
        auto d = direction_from(dir);
        if (!d) {
            fail(BadDirectionError(lineno, std::string(dir)));
            continue;
        }
        inst.direction = *d;

        std::string_view orig = get(fields, kOrigLabel);
        if (!orig.empty() && orig != "_") inst.orig_label = std::string(orig);

        std::string_view raw_label = get(fields, kLabel);
        inst.label = to_lower_ascii(trim(raw_label));
        if (!inventory.contains(inst.label)) {
            // Warning-level: the instance is retained and flagged.
            inst.label_known = false;
            if (diag)
                diag->warn(path.string() + ":" + std::to_string(lineno) + ": label '" +
                           std::string(raw_label) + "' not in inventory");
        }

        inst.instance_id = ordinal++;
        out.instances.push_back(std::move(inst));
    }
    return out;
}

// Serializes instances under the given column order. Embedded tabs/newlines
// in text fields are replaced with spaces and reported as warnings; columns
// the instance has no value for are written as "_".
inline std::string serialize_rels(const std::vector<RelationInstance>& instances,
                                  const std::vector<std::string>& header,
                                  Diagnostics* diag = nullptr) {
    using namespace rels_columns;
    std::string out = join(header, "\t");
    out += '\n';
    for (const auto& inst : instances) {
        std::vector<std::string> fields;
        fields.reserve(header.size());
        for (const auto& name : header) {
            std::string value = "_";
            if (name == kDoc) value = inst.doc_id;
            else if (name == kUnit1Toks) value = inst.unit1_spans.str();
            else if (name == kUnit2Toks) value = inst.unit2_spans.str();
            else if (name == kUnit1Txt) value = inst.unit1_text;
            else if (name == kUnit2Txt) value = inst.unit2_text;
            else if (name == kS1Toks) value = inst.sent1_spans ? inst.sent1_spans->str() : "_";
            else if (name == kS2Toks) value = inst.sent2_spans ? inst.sent2_spans->str() : "_";
            else if (name == kUnit1Sent) value = inst.sent1_text.empty() ? "_" : inst.sent1_text;
            else if (name == kUnit2Sent) value = inst.sent2_text.empty() ? "_" : inst.sent2_text;
            else if (name == kDir) value = std::string(direction_str(inst.direction));
            else if (name == kOrigLabel) value = inst.orig_label ? *inst.orig_label : "_";
            else if (name == kLabel) value = inst.label;

            bool changed = false;
            value = sanitize_tsv_field(value, &changed);
            if (changed && diag)
                diag->warn("instance " + std::to_string(inst.instance_id) + " column " + name +
                           ": embedded tab/newline replaced with space");
            fields.push_back(std::move(value));
        }
        out += join(fields, "\t");
        out += '\n';
    }
    return out;
}

// ---------------------------------------------------------------------------
// CoNLL-U documents
// ---------------------------------------------------------------------------

// Minimal CoNLL-U reader: '# newdoc id = X' opens a document, blank lines
// separate sentences, '# speaker = Y' annotates the following sentence.
// Multiword-token range lines ("3-4") and empty nodes ("5.1") do not count
// as tokens.
inline std::vector<DocumentModel> parse_conllu(const fs::path& path, Diagnostics* diag = nullptr) {
    std::string content = read_file(path);
    std::vector<std::string> lines = split_lines(content);

    std::vector<DocumentModel> docs;
    std::vector<std::string> pending_tokens;
    std::optional<std::string> pending_speaker;

    auto flush_sentence = [&]() {
        if (pending_tokens.empty()) {
            pending_speaker.reset();
            return;
        }
        if (docs.empty()) {
            // Token lines before any '# newdoc id': synthesize an unnamed document.
            docs.push_back(DocumentModel{});
        }
        Sentence s;
        s.tokens = std::move(pending_tokens);
        s.speaker = pending_speaker;
        docs.back().token_count += static_cast<int>(s.tokens.size());
        docs.back().sentences.push_back(std::move(s));
        pending_tokens.clear();
        pending_speaker.reset();
    };

    for (std::size_t i = 0; i < lines.size(); ++i) {
        std::string_view line = lines[i];
        if (trim(line).empty()) {
            flush_sentence();
            continue;
        }
        if (line.front() == '#') {
            std::string_view body = trim(line.substr(1));
            std::size_t eq = body.find('=');
            if (eq != std::string_view::npos) {
                std::string key = std::string(trim(body.substr(0, eq)));
                std::string value = std::string(trim(body.substr(eq + 1)));
                if (key == "newdoc id") {
                    flush_sentence();
                    DocumentModel doc;
                    doc.doc_id = value;
                    docs.push_back(std::move(doc));
                } else if (key == "speaker") {
                    pending_speaker = value;
                }
            }
            continue;
        }
        // Token line.
        std::vector<std::string> fields = split(line, '\t');
        if (fields.size() < 2) {
            MalformedLineError err(i + 1);
            if (!diag) throw err;
            diag->error(path.string() + ": " + err.what());
            continue;
        }
        const std::string& id = fields[0];
        bool is_word = !id.empty() && id.find('-') == std::string::npos &&
                       id.find('.') == std::string::npos;
        if (is_word) pending_tokens.push_back(fields[1]);
    }
    flush_sentence();
    return docs;
}

// ---------------------------------------------------------------------------
// Genre inference
// ---------------------------------------------------------------------------

// GUM-style ids ("GUM_reddit_macroeconomics") carry the genre as their second
// underscore-separated field. Everything else falls back to a per-corpus
// override, then to "unknown". Total and deterministic.
inline std::string infer_genre(std::string_view doc_id, const CorpusId& corpus,
                               const std::map<std::string, std::string>& overrides) {
    auto parts = split(doc_id, '_');
    if (parts.size() >= 3) {
        bool nonempty = !parts[0].empty() && !parts[1].empty() && !parts[2].empty();
        if (nonempty) return parts[1];
    }
    auto it = overrides.find(corpus.str());
    if (it != overrides.end()) return it->second;
    return "unknown";
}

// "corpus<TAB>genre" per line, '#' comments.
inline std::map<std::string, std::string> load_genre_overrides(const fs::path& path) {
    std::map<std::string, std::string> out;
    for (const auto& line : split_lines(read_file(path))) {
        std::string_view t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        auto fields = split(t, '\t');
        if (fields.size() != 2)
            throw ConfigError(path.string() + ": expected 'corpus<TAB>genre', got: " + std::string(t));
        out[std::string(trim(fields[0]))] = std::string(trim(fields[1]));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Degraded documents
// ---------------------------------------------------------------------------

// When a document referenced by the .rels file is missing from the .conllu
// companion, a model is built from the sentence columns alone: sentences in
// first-appearance order, tokens by whitespace. Token indices then live in
// the synthesized numbering, so span containment is unreliable; context falls
// back to text matching.
inline DocumentModel synthesize_document(std::string_view doc_id,
                                         const std::vector<const RelationInstance*>& rows) {
    DocumentModel doc;
    doc.doc_id = std::string(doc_id);
    std::unordered_set<std::string> seen;
    auto add = [&](const std::string& text) {
        std::string norm = collapse_ws(text);
        if (norm.empty() || !seen.insert(norm).second) return;
        Sentence s;
        s.tokens = tokenize_ws(norm);
        doc.token_count += static_cast<int>(s.tokens.size());
        doc.sentences.push_back(std::move(s));
    };
    for (const auto* row : rows) {
        add(row->sent1_text);
        add(row->sent2_text);
    }
    return doc;
}

// Groups instances of one file by document, preserving row order.
inline std::map<std::string, std::vector<const RelationInstance*>> group_by_document(
    const std::vector<RelationInstance>& instances) {
    std::map<std::string, std::vector<const RelationInstance*>> out;
    for (const auto& inst : instances) out[inst.doc_id].push_back(&inst);
    return out;
}

}  // namespace discoforge
