#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "discoforge/corpus.hpp"
#include "discoforge/errors.hpp"
#include "discoforge/features.hpp"
#include "discoforge/io.hpp"
#include "discoforge/rng.hpp"
#include "discoforge/text.hpp"

namespace discoforge {

// ---------------------------------------------------------------------------
// Source-target mapping
// ---------------------------------------------------------------------------

// One translate-train pairing: a low-resource target corpus, the English
// source corpora to draw from, the admissible source genres ("all" lifts the
// genre restriction), and the size ratio of augmented to original data.
struct AugmentationMapping {
    CorpusId target;
    std::vector<CorpusId> sources;
    std::set<std::string> genres;  // empty iff all_genres
    bool all_genres = false;
    double ratio = 0.75;

    bool genre_admissible(std::string_view genre) const {
        return all_genres || genres.count(std::string(genre)) > 0;
    }
};

// Mapping config: "target<TAB>sources<TAB>genres[<TAB>ratio]" per line with
// comma-separated source and genre lists; '#' comments.
inline std::vector<AugmentationMapping> load_mapping(const fs::path& path) {
    std::vector<AugmentationMapping> out;
    std::size_t lineno = 0;
    for (const auto& line : split_lines(read_file(path))) {
        ++lineno;
        std::string_view t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        auto fields = split(t, '\t');
        if (fields.size() < 3)
            throw ConfigError(path.string() + ":" + std::to_string(lineno) +
                              ": expected target, sources, genres");
        AugmentationMapping m;
        m.target = CorpusId::parse(trim(fields[0]));
        for (const auto& s : split(fields[1], ','))
            m.sources.push_back(CorpusId::parse(trim(s)));
        for (const auto& g : split(fields[2], ',')) {
            std::string genre = to_lower_ascii(trim(g));
            if (genre == "all")
                m.all_genres = true;
            else if (!genre.empty())
                m.genres.insert(std::move(genre));
        }
        if (m.all_genres) m.genres.clear();
        if (fields.size() >= 4 && !trim(fields[3]).empty()) {
            try {
                m.ratio = std::stod(std::string(trim(fields[3])));
            } catch (const std::exception&) {
                throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": bad ratio");
            }
        }
        if (!(m.ratio > 0.0 && m.ratio <= 1.0))
            throw ConfigError(path.string() + ":" + std::to_string(lineno) +
                              ": ratio must be in (0,1]");
        if (m.sources.empty())
            throw ConfigError(path.string() + ":" + std::to_string(lineno) + ": no source corpora");
        out.push_back(std::move(m));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Structural filters
// ---------------------------------------------------------------------------

// Named exclusion predicates for source instances whose annotation pattern
// does not transfer to the target corpus. The built-in relative_clause_unit
// predicate fires when either unit's first token is a relative pronoun,
// approximating "unit is a relative clause" without a parser.
class StructuralFilterSet {
public:
    static StructuralFilterSet create(const std::vector<std::string>& predicate_names,
                                      std::set<std::string> relative_pronouns = default_pronouns()) {
        StructuralFilterSet f;
        for (const auto& name : predicate_names) {
            if (name != "relative_clause_unit") throw UnknownPredicateError(name);
            f.relative_clause_ = true;
        }
        f.pronouns_ = std::move(relative_pronouns);
        return f;
    }

    static StructuralFilterSet none() { return StructuralFilterSet{}; }

    static std::set<std::string> default_pronouns() {
        return {"which", "who", "that", "whose", "whom"};
    }

    // True iff no predicate fires.
    bool passes(const RelationInstance& inst) const {
        if (relative_clause_) {
            if (first_token_in_pronouns(inst.unit1_text) || first_token_in_pronouns(inst.unit2_text))
                return false;
        }
        return true;
    }

private:
    bool first_token_in_pronouns(std::string_view text) const {
        auto toks = tokenize_ws(text);
        if (toks.empty()) return false;
        return pronouns_.count(to_lower_ascii(toks.front())) > 0;
    }

    bool relative_clause_ = false;
    std::set<std::string> pronouns_;
};

inline bool structural_filter(const RelationInstance& inst, const StructuralFilterSet& predicates) {
    return predicates.passes(inst);
}

// One token per line, '#' comments.
inline std::set<std::string> load_pronoun_list(const fs::path& path) {
    std::set<std::string> out;
    for (const auto& line : split_lines(read_file(path))) {
        std::string_view t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        out.insert(to_lower_ascii(t));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Plans
// ---------------------------------------------------------------------------

struct SourceRef {
    std::string corpus;  // rendered CorpusId
    int instance_id = 0;

    friend bool operator<(const SourceRef& a, const SourceRef& b) {
        if (a.corpus != b.corpus) return a.corpus < b.corpus;
        return a.instance_id < b.instance_id;
    }
    friend bool operator==(const SourceRef&, const SourceRef&) = default;
};

struct AugmentationPlan {
    AugmentationMapping mapping;
    int target_train_size = 0;
    std::map<std::string, int> quota;      // label -> planned count
    std::map<std::string, int> shortfall;  // label -> unmet part of the quota
    std::vector<SourceRef> selected;       // sorted by (corpus, instance_id)
    std::uint64_t seed = 0;
};

// A source corpus offered to the planner: its instances plus the genre of
// each instance's document (parallel vector).
struct SourcePool {
    CorpusId corpus;
    const std::vector<RelationInstance>* instances = nullptr;
    std::vector<std::string> genres;
};

// Proportional apportionment by largest remainder: quotas sum to total and
// track the histogram as closely as integer counts allow. Ties go to the
// lexicographically smaller label.
inline std::map<std::string, int> apportion_quota(const std::map<std::string, int>& histogram,
                                                  int total) {
    std::map<std::string, int> quota;
    long long mass = 0;
    for (const auto& [label, count] : histogram) mass += std::max(0, count);
    if (mass <= 0 || total <= 0) return quota;

    struct Part {
        std::string label;
        int base;
        double remainder;
    };
    std::vector<Part> parts;
    long long assigned = 0;
    for (const auto& [label, count] : histogram) {
        double exact = static_cast<double>(total) * std::max(0, count) / static_cast<double>(mass);
        int base = static_cast<int>(exact);
        parts.push_back({label, base, exact - base});
        assigned += base;
    }
    std::sort(parts.begin(), parts.end(), [](const Part& a, const Part& b) {
        if (a.remainder != b.remainder) return a.remainder > b.remainder;
        return a.label < b.label;
    });
    long long leftover = total - assigned;
    for (auto& p : parts) {
        int v = p.base + (leftover > 0 ? 1 : 0);
        if (leftover > 0) --leftover;
        if (v > 0) quota[p.label] = v;
    }
    return quota;
}

// Plans an augmentation set of round(ratio * target_train_size) instances
// whose label distribution mirrors the target histogram. Selection per label
// is seeded uniform sampling without replacement from the genre-admissible,
// filter-passing source instances; when supply runs short the label is
// filled to supply and the shortfall recorded.
inline AugmentationPlan plan_augmentation(const AugmentationMapping& mapping,
                                          const std::vector<SourcePool>& sources,
                                          const std::map<std::string, int>& target_histogram,
                                          int target_train_size, std::uint64_t seed,
                                          const StructuralFilterSet& filters,
                                          Diagnostics* diag = nullptr) {
    if (target_histogram.empty()) throw Error("plan_augmentation: empty target histogram");
    if (target_train_size <= 0) throw Error("plan_augmentation: target size must be positive");

    AugmentationPlan plan;
    plan.mapping = mapping;
    plan.target_train_size = target_train_size;
    plan.seed = seed;

    const int total = static_cast<int>(std::llround(mapping.ratio * target_train_size));
    plan.quota = apportion_quota(target_histogram, total);
    if (plan.quota.empty()) {
        if (diag)
            diag->warn("target " + mapping.target.str() + ": quota rounds to zero, nothing to plan");
        return plan;
    }

    // Admissible candidates per label, in deterministic (source order, file
    // order) sequence.
    std::map<std::string, std::vector<SourceRef>> supply;
    for (const auto& pool : sources) {
        if (!pool.instances) continue;
        const auto& instances = *pool.instances;
        for (std::size_t i = 0; i < instances.size(); ++i) {
            const RelationInstance& inst = instances[i];
            std::string genre = i < pool.genres.size() ? pool.genres[i] : std::string("unknown");
            if (!mapping.genre_admissible(genre)) continue;
            if (!filters.passes(inst)) continue;
            supply[inst.label].push_back(SourceRef{pool.corpus.str(), inst.instance_id});
        }
    }

    bool any_supply = false;
    for (const auto& [label, want] : plan.quota) {
        auto it = supply.find(label);
        if (want > 0 && it != supply.end() && !it->second.empty()) any_supply = true;
    }
    if (!any_supply)
        throw EmptySupplyError("no source instance passes the genre and structural filters for any "
                               "label of target " +
                               mapping.target.str());

    SplitMix64 rng(seed);
    for (const auto& [label, want] : plan.quota) {  // std::map: sorted label order
        auto it = supply.find(label);
        std::size_t available = it == supply.end() ? 0 : it->second.size();
        std::size_t take = std::min<std::size_t>(available, static_cast<std::size_t>(want));
        if (take < static_cast<std::size_t>(want)) {
            plan.shortfall[label] = want - static_cast<int>(take);
            if (diag)
                diag->warn("label '" + label + "': supply " + std::to_string(available) +
                           " below quota " + std::to_string(want));
        }
        if (take == 0) continue;
        for (std::size_t idx : sample_indices(available, take, rng))
            plan.selected.push_back(it->second[idx]);
    }
    std::sort(plan.selected.begin(), plan.selected.end());
    return plan;
}

// --- plan (de)serialization -------------------------------------------------

inline nlohmann::ordered_json plan_to_json(const AugmentationPlan& plan) {
    nlohmann::ordered_json j;
    j["target"] = plan.mapping.target.str();
    nlohmann::ordered_json sources = nlohmann::ordered_json::array();
    for (const auto& s : plan.mapping.sources) sources.push_back(s.str());
    j["sources"] = sources;
    j["genres"] = plan.mapping.all_genres
                      ? nlohmann::ordered_json::array({"all"})
                      : nlohmann::ordered_json(std::vector<std::string>(plan.mapping.genres.begin(),
                                                                        plan.mapping.genres.end()));
    j["ratio"] = plan.mapping.ratio;
    j["target_train_size"] = plan.target_train_size;
    j["seed"] = plan.seed;
    j["quota"] = plan.quota;
    j["shortfall"] = plan.shortfall;
    nlohmann::ordered_json selected = nlohmann::ordered_json::array();
    for (const auto& ref : plan.selected)
        selected.push_back({{"corpus", ref.corpus}, {"id", ref.instance_id}});
    j["selected"] = selected;
    return j;
}

inline AugmentationPlan plan_from_json(const nlohmann::json& j) {
    AugmentationPlan plan;
    plan.mapping.target = CorpusId::parse(j.at("target").get<std::string>());
    for (const auto& s : j.at("sources")) plan.mapping.sources.push_back(CorpusId::parse(s.get<std::string>()));
    for (const auto& g : j.at("genres")) {
        std::string genre = g.get<std::string>();
        if (genre == "all")
            plan.mapping.all_genres = true;
        else
            plan.mapping.genres.insert(genre);
    }
    plan.mapping.ratio = j.at("ratio").get<double>();
    plan.target_train_size = j.at("target_train_size").get<int>();
    plan.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& [label, v] : j.at("quota").items()) plan.quota[label] = v.get<int>();
    if (j.contains("shortfall"))
        for (const auto& [label, v] : j.at("shortfall").items()) plan.shortfall[label] = v.get<int>();
    for (const auto& ref : j.at("selected"))
        plan.selected.push_back(SourceRef{ref.at("corpus").get<std::string>(), ref.at("id").get<int>()});
    return plan;
}

inline AugmentationPlan load_plan(const fs::path& path) {
    try {
        return plan_from_json(nlohmann::json::parse(read_file(path)));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Translation batches
// ---------------------------------------------------------------------------

enum class TranslationField { Unit1, Unit2, Sent1, Sent2, ContextPre, ContextPost };

inline std::string_view translation_field_str(TranslationField f) {
    switch (f) {
        case TranslationField::Unit1: return "unit1";
        case TranslationField::Unit2: return "unit2";
        case TranslationField::Sent1: return "sent1";
        case TranslationField::Sent2: return "sent2";
        case TranslationField::ContextPre: return "context_pre";
        case TranslationField::ContextPost: return "context_post";
    }
    return "unit1";
}

inline std::optional<TranslationField> translation_field_from(std::string_view s) {
    if (s == "unit1") return TranslationField::Unit1;
    if (s == "unit2") return TranslationField::Unit2;
    if (s == "sent1") return TranslationField::Sent1;
    if (s == "sent2") return TranslationField::Sent2;
    if (s == "context_pre") return TranslationField::ContextPre;
    if (s == "context_post") return TranslationField::ContextPost;
    return std::nullopt;
}

struct TranslationRow {
    SourceRef ref;
    TranslationField field = TranslationField::Unit1;
    std::string source_text;
    std::string translated_text;  // empty until the external translation step
};

// Rows keyed by (corpus, instance_id, field); the key set is unique and rows
// are kept sorted by it.
struct TranslationBatch {
    std::vector<TranslationRow> rows;

    const TranslationRow* find(const SourceRef& ref, TranslationField field) const {
        for (const auto& r : rows)
            if (r.ref == ref && r.field == field) return &r;
        return nullptr;
    }
};

// The data needed to look up a plan's selected instances.
struct SourceData {
    CorpusId corpus;
    const std::vector<RelationInstance>* instances = nullptr;
    const std::vector<DocumentModel>* documents = nullptr;  // optional, for context fields
};

namespace detail {

inline const RelationInstance& find_instance(const std::vector<SourceData>& sources,
                                             const SourceRef& ref) {
    for (const auto& src : sources) {
        if (src.corpus.str() != ref.corpus || !src.instances) continue;
        for (const auto& inst : *src.instances)
            if (inst.instance_id == ref.instance_id) return inst;
    }
    throw MissingInstanceError("selected instance " + ref.corpus + "#" +
                               std::to_string(ref.instance_id) + " absent from loaded data");
}

inline const DocumentModel* find_document(const std::vector<SourceData>& sources,
                                          const SourceRef& ref, const std::string& doc_id) {
    for (const auto& src : sources) {
        if (src.corpus.str() != ref.corpus || !src.documents) continue;
        for (const auto& doc : *src.documents)
            if (doc.doc_id == doc_id) return &doc;
    }
    return nullptr;
}

}  // namespace detail

// One row per (instance, field) needing translation: always unit1 and unit2,
// plus sentence and non-empty context fields when include_context is set.
// translated_text is left empty. Rows come out sorted by (corpus, id, field).
inline TranslationBatch emit_translation_batch(const AugmentationPlan& plan,
                                               const std::vector<SourceData>& sources,
                                               bool include_context = false) {
    TranslationBatch batch;
    for (const auto& ref : plan.selected) {
        const RelationInstance& inst = detail::find_instance(sources, ref);
        auto add = [&](TranslationField field, std::string text) {
            if (text.empty()) return;
            batch.rows.push_back(TranslationRow{ref, field, std::move(text), ""});
        };
        add(TranslationField::Unit1, inst.unit1_text);
        add(TranslationField::Unit2, inst.unit2_text);
        if (include_context) {
            add(TranslationField::Sent1, inst.sent1_text);
            add(TranslationField::Sent2, inst.sent2_text);
            if (const DocumentModel* doc = detail::find_document(sources, ref, inst.doc_id)) {
                ContextWindow ctx = extract_context(inst, *doc);
                add(TranslationField::ContextPre, ctx.pre);
                add(TranslationField::ContextPost, ctx.post);
            }
        }
    }
    std::sort(batch.rows.begin(), batch.rows.end(), [](const TranslationRow& a, const TranslationRow& b) {
        if (!(a.ref == b.ref)) return a.ref < b.ref;
        return static_cast<int>(a.field) < static_cast<int>(b.field);
    });
    return batch;
}

inline const std::vector<std::string>& translation_batch_header() {
    static const std::vector<std::string> h = {"corpus", "instance_id", "field", "source_text",
                                               "translated_text"};
    return h;
}

inline std::string serialize_translation_batch(const TranslationBatch& batch,
                                               Diagnostics* diag = nullptr) {
    std::string out = join(translation_batch_header(), "\t");
    out += '\n';
    for (const auto& r : batch.rows) {
        bool changed = false;
        std::vector<std::string> fields = {r.ref.corpus, std::to_string(r.ref.instance_id),
                                           std::string(translation_field_str(r.field)),
                                           sanitize_tsv_field(r.source_text, &changed),
                                           sanitize_tsv_field(r.translated_text)};
        if (changed && diag)
            diag->warn("batch row " + r.ref.corpus + "#" + std::to_string(r.ref.instance_id) +
                       ": embedded tab/newline replaced");
        out += join(fields, "\t");
        out += '\n';
    }
    return out;
}

inline TranslationBatch parse_translation_batch(const fs::path& path) {
    std::vector<std::string> lines = split_lines(read_file(path));
    if (!lines.empty() && lines.back().empty()) lines.pop_back();
    if (lines.empty()) throw RelsFormatError(path.string() + ": empty batch file");
    std::vector<std::string> header = split(lines[0], '\t');
    if (header != translation_batch_header())
        throw RelsFormatError(path.string() + ": unexpected batch header");

    TranslationBatch batch;
    std::set<std::string> keys;  // "(corpus)#(id):(field)" uniqueness
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        auto fields = split(lines[i], '\t');
        if (fields.size() < 4)
            throw RelsFormatError(path.string() + ":" + std::to_string(i + 1) + ": short row");
        TranslationRow row;
        row.ref.corpus = fields[0];
        if (!parse_int(fields[1], row.ref.instance_id))
            throw RelsFormatError(path.string() + ":" + std::to_string(i + 1) + ": bad instance id");
        auto field = translation_field_from(fields[2]);
        if (!field)
            throw RelsFormatError(path.string() + ":" + std::to_string(i + 1) + ": bad field name");
        row.field = *field;
        row.source_text = fields[3];
        row.translated_text = fields.size() > 4 ? fields[4] : "";
        std::string key = row.ref.corpus + "#" + fields[1] + ":" + fields[2];
        if (!keys.insert(key).second)
            throw RelsFormatError(path.string() + ":" + std::to_string(i + 1) +
                                  ": duplicate row for " + key);
        batch.rows.push_back(std::move(row));
    }
    return batch;
}

// ---------------------------------------------------------------------------
// Merge
// ---------------------------------------------------------------------------

// Builds target-language instances from a completed batch. Labels and
// direction carry over from the source; spans become synthetic contiguous
// ranges over the translated token counts (token alignment across
// translation is out of scope). Document ids gain an "aug_" prefix.
inline std::vector<RelationInstance> merge_translations(const AugmentationPlan& plan,
                                                        const TranslationBatch& batch,
                                                        const std::vector<SourceData>& sources) {
    std::vector<std::string> missing;
    for (const auto& ref : plan.selected) {
        for (auto field : {TranslationField::Unit1, TranslationField::Unit2}) {
            const TranslationRow* row = batch.find(ref, field);
            if (!row || trim(row->translated_text).empty())
                missing.push_back(ref.corpus + "#" + std::to_string(ref.instance_id) + ":" +
                                  std::string(translation_field_str(field)));
        }
    }
    if (!missing.empty()) {
        std::sort(missing.begin(), missing.end());
        std::string msg = "batch incomplete, missing " + std::to_string(missing.size()) +
                          " translations: " + join(missing, ", ");
        throw IncompleteBatchError(std::move(msg), std::move(missing));
    }

    std::vector<RelationInstance> out;
    out.reserve(plan.selected.size());
    for (const auto& ref : plan.selected) {
        const RelationInstance& src = detail::find_instance(sources, ref);
        auto translated = [&](TranslationField field) -> std::string {
            const TranslationRow* row = batch.find(ref, field);
            return row ? std::string(trim(row->translated_text)) : std::string();
        };

        RelationInstance inst;
        inst.doc_id = "aug_" + ref.corpus + "_" + src.doc_id;
        inst.unit1_text = translated(TranslationField::Unit1);
        inst.unit2_text = translated(TranslationField::Unit2);
        std::string s1 = translated(TranslationField::Sent1);
        std::string s2 = translated(TranslationField::Sent2);
        inst.sent1_text = s1.empty() ? inst.unit1_text : s1;
        inst.sent2_text = s2.empty() ? inst.unit2_text : s2;

        int n1 = std::max<int>(1, static_cast<int>(tokenize_ws(inst.unit1_text).size()));
        int n2 = std::max<int>(1, static_cast<int>(tokenize_ws(inst.unit2_text).size()));
        inst.unit1_spans.ranges = {{1, n1}};
        inst.unit2_spans.ranges = {{n1 + 1, n1 + n2}};

        inst.direction = src.direction;
        inst.label = src.label;
        inst.orig_label = src.orig_label;
        inst.instance_id = static_cast<int>(out.size());
        out.push_back(std::move(inst));
    }
    return out;
}

// Name for the augmented .rels file; the original training file is never
// overwritten.
inline std::string augmented_rels_filename(const CorpusId& target) {
    return target.str() + "_aug.rels";
}

}  // namespace discoforge
