#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "discoforge/corpus.hpp"
#include "discoforge/errors.hpp"
#include "discoforge/features.hpp"
#include "discoforge/io.hpp"
#include "discoforge/text.hpp"

namespace discoforge {

// ---------------------------------------------------------------------------
// Feature subsets
// ---------------------------------------------------------------------------

// Which instance features each model input carries. The defaults are the
// fixed decoder/encoder selections; configs may override them for ablations.
struct FeatureSubset {
    std::vector<std::string> names;

    static const std::vector<std::string>& known_names() {
        static const std::vector<std::string> k = {
            "genre",       "children",     "discontinuous", "is_sentence", "length_ratio",
            "same_speaker", "doc_length",  "position",      "distance",    "lexical_overlap"};
        return k;
    }

    static FeatureSubset from_names(const std::vector<std::string>& names) {
        const auto& known = known_names();
        for (const auto& n : names)
            if (std::find(known.begin(), known.end(), n) == known.end())
                throw ConfigError("unknown feature name: " + n);
        return FeatureSubset{names};
    }

    static FeatureSubset decoder_default() {
        return FeatureSubset{{"same_speaker", "position", "distance"}};
    }

    static FeatureSubset encoder_default() {
        return FeatureSubset{{"genre", "discontinuous", "is_sentence", "same_speaker"}};
    }

    bool has(std::string_view name) const {
        return std::find(names.begin(), names.end(), name) != names.end();
    }
};

// ---------------------------------------------------------------------------
// Prompt templates
// ---------------------------------------------------------------------------

// A prompt body with {PLACEHOLDER} slots. The placeholder set is closed;
// {ARG1}, {ARG2} and {LABEL_LIST} must each occur exactly once.
struct PromptTemplate {
    std::string name;
    std::string body;

    static const std::vector<std::string>& placeholders() {
        static const std::vector<std::string> p = {"LANGUAGE", "FRAMEWORK", "CORPUS",   "GENRE",
                                                   "CONTEXT",  "ARG1",      "ARG2",     "DIRECTION",
                                                   "FEATURES", "LABEL_LIST"};
        return p;
    }

    static PromptTemplate from_string(std::string name, std::string body) {
        PromptTemplate tpl{std::move(name), std::move(body)};
        tpl.validate();
        return tpl;
    }

    static PromptTemplate load(const fs::path& path) {
        return from_string(path.stem().string(), read_file(path));
    }

    void validate() const {
        int arg1 = 0, arg2 = 0, label_list = 0;
        std::size_t i = 0;
        while ((i = body.find('{', i)) != std::string::npos) {
            std::size_t close = body.find('}', i + 1);
            if (close == std::string::npos) break;
            std::string_view inner(body.data() + i + 1, close - i - 1);
            bool upper_ident = !inner.empty() &&
                               std::all_of(inner.begin(), inner.end(), [](char c) {
                                   return (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
                               });
            if (upper_ident) {
                const auto& known = placeholders();
                if (std::find(known.begin(), known.end(), inner) == known.end())
                    throw TemplateError("template '" + name + "': unknown placeholder {" +
                                        std::string(inner) + "}");
                if (inner == "ARG1") ++arg1;
                if (inner == "ARG2") ++arg2;
                if (inner == "LABEL_LIST") ++label_list;
            }
            i = close + 1;
        }
        if (arg1 != 1 || arg2 != 1 || label_list != 1)
            throw TemplateError("template '" + name +
                                "': {ARG1}, {ARG2} and {LABEL_LIST} must each occur exactly once");
    }
};

// ---------------------------------------------------------------------------
// Rendered records
// ---------------------------------------------------------------------------

enum class PromptStyle { Verbose, Structured };

inline std::string_view style_str(PromptStyle s) {
    return s == PromptStyle::Verbose ? "verbose" : "structured";
}

struct PromptRecord {
    int instance_id = 0;
    CorpusId corpus;
    std::string prompt;
    std::string target;
    PromptStyle style = PromptStyle::Verbose;
};

struct EncoderRecord {
    int instance_id = 0;
    CorpusId corpus;
    std::string input;  // space-separated token stream
    std::string target;
};

// ---------------------------------------------------------------------------
// Feature rendering
// ---------------------------------------------------------------------------

namespace detail {

inline std::string bit(bool v) { return v ? "1" : "0"; }

// Same-speaker for token/compact renderings: unknown degrades to 0 with a
// warning, since the token vocabulary is binary.
inline std::string same_speaker_bit(TriState t, Diagnostics* diag, std::string_view where) {
    if (t == TriState::Unknown && diag)
        diag->warn(std::string(where) + ": same_speaker unknown, emitting 0");
    return bit(t == TriState::True);
}

// One labeled line per selected feature, in the subset's order. The speaker
// line is omitted entirely when unknown; children are omitted when absent.
inline std::vector<std::string> prose_feature_lines(const FeatureVector& fv,
                                                    const FeatureSubset& subset) {
    std::vector<std::string> lines;
    for (const auto& name : subset.names) {
        if (name == "genre") {
            lines.push_back("Genre: " + fv.genre);
        } else if (name == "children") {
            if (fv.children_u1 && fv.children_u2)
                lines.push_back("Children: unit1=" + std::to_string(*fv.children_u1) + ", unit2=" +
                                std::to_string(*fv.children_u2));
        } else if (name == "discontinuous") {
            lines.push_back(std::string("Discontinuous: unit1=") +
                            (fv.discontinuous_u1 ? "true" : "false") + ", unit2=" +
                            (fv.discontinuous_u2 ? "true" : "false"));
        } else if (name == "is_sentence") {
            lines.push_back(std::string("Is sentence: unit1=") +
                            (fv.is_sentence_u1 ? "true" : "false") + ", unit2=" +
                            (fv.is_sentence_u2 ? "true" : "false"));
        } else if (name == "length_ratio") {
            lines.push_back("Length ratio: " + format_double(fv.length_ratio));
        } else if (name == "same_speaker") {
            if (fv.same_speaker != TriState::Unknown)
                lines.push_back(std::string("Same speaker: ") +
                                (fv.same_speaker == TriState::True ? "true" : "false"));
        } else if (name == "doc_length") {
            lines.push_back("Document length: " + std::to_string(fv.doc_length));
        } else if (name == "position") {
            lines.push_back("Position: " + format_fixed(fv.position, 2));
        } else if (name == "distance") {
            lines.push_back("Distance: " + std::to_string(fv.distance));
        } else if (name == "lexical_overlap") {
            lines.push_back("Lexical overlap: " + std::to_string(fv.lexical_overlap));
        }
    }
    return lines;
}

// Compact key=value fields for the structured prompt. Per-unit booleans
// collapse the way the encoder tokens do: is_sentence is the conjunction,
// discontinuous the disjunction.
inline std::vector<std::string> compact_feature_fields(const FeatureVector& fv,
                                                       const FeatureSubset& subset) {
    std::vector<std::string> fields;
    for (const auto& name : subset.names) {
        if (name == "genre") {
            fields.push_back("genre=" + fv.genre);
        } else if (name == "children") {
            if (fv.children_u1 && fv.children_u2)
                fields.push_back("children=" + std::to_string(*fv.children_u1) + "," +
                                 std::to_string(*fv.children_u2));
        } else if (name == "discontinuous") {
            fields.push_back("discontinuous=" + bit(fv.discontinuous_u1 || fv.discontinuous_u2));
        } else if (name == "is_sentence") {
            fields.push_back("is_sentence=" + bit(fv.is_sentence_u1 && fv.is_sentence_u2));
        } else if (name == "length_ratio") {
            fields.push_back("length_ratio=" + format_double(fv.length_ratio));
        } else if (name == "same_speaker") {
            if (fv.same_speaker != TriState::Unknown)
                fields.push_back("same_speaker=" + bit(fv.same_speaker == TriState::True));
        } else if (name == "doc_length") {
            fields.push_back("doc_length=" + std::to_string(fv.doc_length));
        } else if (name == "position") {
            fields.push_back("position=" + format_fixed(fv.position, 2));
        } else if (name == "distance") {
            fields.push_back("distance=" + std::to_string(fv.distance));
        } else if (name == "lexical_overlap") {
            fields.push_back("lexical_overlap=" + std::to_string(fv.lexical_overlap));
        }
    }
    return fields;
}

inline std::string sanitize_token(std::string_view s) {
    std::string out(s);
    for (char& c : out)
        if (is_ws(c)) c = '_';
    return out;
}

}  // namespace detail

// Context rendered as up to three labeled lines; empty parts are omitted.
inline std::string render_context_block(const ContextWindow& ctx) {
    std::vector<std::string> lines;
    if (!ctx.pre.empty()) lines.push_back("Preceding: " + ctx.pre);
    if (!ctx.focal.empty()) lines.push_back("Focal: " + ctx.focal);
    if (!ctx.post.empty()) lines.push_back("Following: " + ctx.post);
    return join(lines, "\n");
}

// ---------------------------------------------------------------------------
// Builders
// ---------------------------------------------------------------------------

inline PromptRecord build_verbose_prompt(const RelationInstance& inst, const FeatureVector& fv,
                                         const ContextWindow& ctx, const PromptTemplate& tpl,
                                         const LabelInventory& inv,
                                         const FeatureSubset& subset = FeatureSubset::decoder_default()) {
    std::string prompt = tpl.body;
    auto substitute = [&prompt](std::string_view key, std::string_view value) {
        std::string pattern = "{" + std::string(key) + "}";
        std::size_t pos = 0;
        while ((pos = prompt.find(pattern, pos)) != std::string::npos) {
            prompt.replace(pos, pattern.size(), value);
            pos += value.size();
        }
    };

    substitute("LANGUAGE", fv.lcf.language);
    substitute("FRAMEWORK", framework_name(fv.lcf.framework));
    substitute("CORPUS", fv.lcf.corpus);
    substitute("GENRE", fv.genre);
    substitute("CONTEXT", render_context_block(ctx));
    substitute("DIRECTION", direction_str(inst.direction));
    substitute("FEATURES", join(detail::prose_feature_lines(fv, subset), "\n"));
    substitute("LABEL_LIST", join(inv.labels, ", "));
    substitute("ARG1", inst.unit1_text);
    substitute("ARG2", inst.unit2_text);

    return PromptRecord{inst.instance_id, fv.lcf, std::move(prompt), inst.label,
                        PromptStyle::Verbose};
}

// Compact delimiter-separated prompt: corpus identity and feature fields on
// the first line, the optional context block, the marked argument pair
// ("$$ Arg1 $$ > ## Arg2 ##"), and the label list.
inline PromptRecord build_structured_prompt(const RelationInstance& inst, const FeatureVector& fv,
                                            const ContextWindow& ctx, const LabelInventory& inv,
                                            const FeatureSubset& subset = FeatureSubset::decoder_default(),
                                            bool include_context = true) {
    std::vector<std::string> head;
    head.push_back(fv.lcf.str());
    for (auto& f : detail::compact_feature_fields(fv, subset)) head.push_back(std::move(f));

    std::string prompt = join(head, " ");
    if (include_context) {
        std::string block = render_context_block(ctx);
        if (!block.empty()) {
            prompt += '\n';
            prompt += block;
        }
    }
    prompt += "\n$$ ";
    prompt += inst.unit1_text;
    prompt += " $$ ";
    prompt += (inst.direction == Direction::Forward) ? '>' : '<';
    prompt += " ## ";
    prompt += inst.unit2_text;
    prompt += " ##";
    prompt += "\nLabels: ";
    prompt += join(inv.labels, ", ");

    return PromptRecord{inst.instance_id, fv.lcf, std::move(prompt), inst.label,
                        PromptStyle::Structured};
}

// Encoder input stream: LCF special tokens, the categorical feature tokens,
// then the direction-marked first argument and the second argument. No
// context is appended. With the default subset the region before the
// arguments is always 3 LCF tokens + 4 feature tokens + 2 separators.
inline EncoderRecord build_encoder_input(const RelationInstance& inst, const FeatureVector& fv,
                                         [[maybe_unused]] const ContextWindow& ctx,
                                         const FeatureSubset& subset = FeatureSubset::encoder_default(),
                                         Diagnostics* diag = nullptr) {
    using detail::bit;
    std::string where = fv.lcf.str() + "#" + std::to_string(inst.instance_id);

    std::vector<std::string> feature_tokens;
    // Fixed token order, independent of the subset's listing order.
    if (subset.has("is_sentence"))
        feature_tokens.push_back("IS_SENTENCE_" + bit(fv.is_sentence_u1 && fv.is_sentence_u2));
    if (subset.has("discontinuous"))
        feature_tokens.push_back("DISCONTINUOUS_" + bit(fv.discontinuous_u1 || fv.discontinuous_u2));
    if (subset.has("same_speaker"))
        feature_tokens.push_back("SAME_SPEAKER_" +
                                 detail::same_speaker_bit(fv.same_speaker, diag, where));
    if (subset.has("genre")) feature_tokens.push_back("GENRE_" + detail::sanitize_token(fv.genre));
    if (subset.has("children") && fv.children_u1 && fv.children_u2)
        feature_tokens.push_back("CHILDREN_" + std::to_string(*fv.children_u1) + "_" +
                                 std::to_string(*fv.children_u2));
    if (subset.has("length_ratio"))
        feature_tokens.push_back("LENGTH_RATIO_" + format_fixed(fv.length_ratio, 2));
    if (subset.has("doc_length"))
        feature_tokens.push_back("DOC_LENGTH_" + std::to_string(fv.doc_length));
    if (subset.has("position"))
        feature_tokens.push_back("POSITION_" + format_fixed(fv.position, 2));
    if (subset.has("distance")) feature_tokens.push_back("DISTANCE_" + std::to_string(fv.distance));
    if (subset.has("lexical_overlap"))
        feature_tokens.push_back("LEXICAL_OVERLAP_" + std::to_string(fv.lexical_overlap));

    std::string input = "LANG_" + fv.lcf.language + " FW_" +
                        std::string(framework_name(fv.lcf.framework)) + " CORP_" + fv.lcf.corpus +
                        " [SEP] " + join(feature_tokens, " ") + " [SEP] " +
                        mark_direction(inst.unit1_text, inst.direction) + " Arg2: " +
                        inst.unit2_text;

    return EncoderRecord{inst.instance_id, fv.lcf, std::move(input), inst.label};
}

// ---------------------------------------------------------------------------
// Record emission
// ---------------------------------------------------------------------------

enum class RecordFormat { Jsonl, Tsv };

inline std::optional<RecordFormat> record_format_from(std::string_view s) {
    if (s == "jsonl") return RecordFormat::Jsonl;
    if (s == "tsv") return RecordFormat::Tsv;
    return std::nullopt;
}

namespace detail {

inline nlohmann::ordered_json record_json(const PromptRecord& r) {
    return {{"id", r.instance_id}, {"prompt", r.prompt}, {"target", r.target},
            {"corpus", r.corpus.str()}};
}

inline nlohmann::ordered_json record_json(const EncoderRecord& r) {
    return {{"id", r.instance_id}, {"input", r.input}, {"target", r.target},
            {"corpus", r.corpus.str()}};
}

inline std::vector<std::string> record_tsv(const PromptRecord& r, Diagnostics* diag) {
    bool changed = false;
    std::string text = sanitize_tsv_field(r.prompt, &changed);
    if (changed && diag)
        diag->warn("record " + std::to_string(r.instance_id) + ": prompt flattened for tsv");
    return {std::to_string(r.instance_id), std::move(text), r.target, r.corpus.str()};
}

inline std::vector<std::string> record_tsv(const EncoderRecord& r, Diagnostics* diag) {
    bool changed = false;
    std::string text = sanitize_tsv_field(r.input, &changed);
    if (changed && diag)
        diag->warn("record " + std::to_string(r.instance_id) + ": input flattened for tsv");
    return {std::to_string(r.instance_id), std::move(text), r.target, r.corpus.str()};
}

inline const char* text_column(const PromptRecord&) { return "prompt"; }
inline const char* text_column(const EncoderRecord&) { return "input"; }

}  // namespace detail

// One record per line; jsonl field order is id, prompt|input, target, corpus.
// Output is byte-stable for identical inputs.
template <typename Record>
std::string render_records(const std::vector<Record>& records, RecordFormat format,
                           Diagnostics* diag = nullptr) {
    std::string out;
    if (format == RecordFormat::Jsonl) {
        for (const auto& r : records) {
            out += detail::record_json(r).dump();
            out += '\n';
        }
    } else {
        std::vector<std::string> header = {"id", detail::text_column(Record{}), "target", "corpus"};
        out = join(header, "\t");
        out += '\n';
        for (const auto& r : records) {
            out += join(detail::record_tsv(r, diag), "\t");
            out += '\n';
        }
    }
    return out;
}

template <typename Record>
void emit_records(const std::vector<Record>& records, RecordFormat format, const fs::path& path,
                  Diagnostics* diag = nullptr) {
    try {
        write_file_atomic(path, render_records(records, format, diag));
    } catch (const IoError&) {
        throw;
    } catch (const std::exception& e) {
        throw IoError(path.string() + ": " + e.what());
    }
}

}  // namespace discoforge
