#pragma once

#include <atomic>
#include <cstdlib>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "discoforge/augment.hpp"
#include "discoforge/corpus.hpp"
#include "discoforge/errors.hpp"
#include "discoforge/evaluation.hpp"
#include "discoforge/features.hpp"
#include "discoforge/io.hpp"
#include "discoforge/prompts.hpp"
#include "discoforge/text.hpp"

namespace discoforge {

inline constexpr std::string_view kToolVersion = "discoforge 0.1.0";

// ---------------------------------------------------------------------------
// Run configuration
// ---------------------------------------------------------------------------

struct CorpusEntry {
    CorpusId id;
    fs::path rels;
    std::optional<fs::path> conllu;
    std::optional<fs::path> pred;
};

// One declarative config drives a whole run; flags may override single
// fields. Relative paths are resolved against the config file's directory.
struct RunConfig {
    std::vector<CorpusEntry> corpora;
    fs::path labels_path;
    fs::path template_path;
    std::optional<fs::path> genre_overrides_path;
    std::optional<fs::path> stoplist_path;
    std::optional<fs::path> pronouns_path;
    std::optional<fs::path> mapping_path;
    std::vector<std::string> styles = {"verbose", "structured", "encoder"};
    std::vector<std::string> decoder_features = FeatureSubset::decoder_default().names;
    std::vector<std::string> encoder_features = FeatureSubset::encoder_default().names;
    std::vector<std::string> predicates = {"relative_clause_unit"};
    RecordFormat record_format = RecordFormat::Jsonl;
    bool batch_context = false;
    std::uint64_t sampling_seed = 0;
    std::uint64_t repair_seed = 0;
    int workers = 1;
    fs::path output_root;
    std::string config_digest;  // digest of the config file bytes

    static RunConfig load(const fs::path& path) {
        std::string bytes;
        nlohmann::json j;
        try {
            bytes = read_file(path);
            j = nlohmann::json::parse(bytes);
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(path.string() + ": " + e.what());
        }

        const fs::path base = path.parent_path();
        auto resolve = [&](const std::string& p) -> fs::path {
            fs::path candidate(p);
            return candidate.is_absolute() ? candidate : base / candidate;
        };
        auto require_path = [&](const fs::path& p, const char* what) {
            if (!fs::exists(p))
                throw ConfigError(path.string() + ": " + what + " does not exist: " + p.string());
        };

        RunConfig cfg;
        cfg.config_digest = fnv1a64_hex(bytes);
        try {
            cfg.labels_path = resolve(j.at("labels").get<std::string>());
            cfg.template_path = resolve(j.at("template").get<std::string>());
            cfg.output_root = resolve(j.at("output_root").get<std::string>());
            if (j.contains("genre_overrides"))
                cfg.genre_overrides_path = resolve(j["genre_overrides"].get<std::string>());
            if (j.contains("stoplist")) cfg.stoplist_path = resolve(j["stoplist"].get<std::string>());
            if (j.contains("pronouns")) cfg.pronouns_path = resolve(j["pronouns"].get<std::string>());
            if (j.contains("mapping")) cfg.mapping_path = resolve(j["mapping"].get<std::string>());
            if (j.contains("styles")) cfg.styles = j["styles"].get<std::vector<std::string>>();
            if (j.contains("decoder_features"))
                cfg.decoder_features = j["decoder_features"].get<std::vector<std::string>>();
            if (j.contains("encoder_features"))
                cfg.encoder_features = j["encoder_features"].get<std::vector<std::string>>();
            if (j.contains("predicates"))
                cfg.predicates = j["predicates"].get<std::vector<std::string>>();
            if (j.contains("record_format")) {
                auto f = record_format_from(j["record_format"].get<std::string>());
                if (!f) throw ConfigError("record_format must be jsonl or tsv");
                cfg.record_format = *f;
            }
            if (j.contains("batch_context")) cfg.batch_context = j["batch_context"].get<bool>();
            if (j.contains("seeds")) {
                cfg.sampling_seed = j["seeds"].value("sampling", std::uint64_t{0});
                cfg.repair_seed = j["seeds"].value("repair", std::uint64_t{0});
            }
            if (j.contains("workers")) cfg.workers = j["workers"].get<int>();
            for (const auto& c : j.at("corpora")) {
                CorpusEntry e;
                e.id = CorpusId::parse(c.at("id").get<std::string>());
                e.rels = resolve(c.at("rels").get<std::string>());
                if (c.contains("conllu")) e.conllu = resolve(c["conllu"].get<std::string>());
                if (c.contains("pred")) e.pred = resolve(c["pred"].get<std::string>());
                cfg.corpora.push_back(std::move(e));
            }
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(path.string() + ": " + e.what());
        }

        if (cfg.corpora.empty()) throw ConfigError(path.string() + ": no corpora configured");
        require_path(cfg.labels_path, "labels file");
        require_path(cfg.template_path, "template file");
        if (cfg.genre_overrides_path) require_path(*cfg.genre_overrides_path, "genre overrides file");
        if (cfg.stoplist_path) require_path(*cfg.stoplist_path, "stoplist");
        if (cfg.pronouns_path) require_path(*cfg.pronouns_path, "pronoun list");
        if (cfg.mapping_path) require_path(*cfg.mapping_path, "augmentation mapping");
        for (const auto& c : cfg.corpora) {
            require_path(c.rels, "rels file");
            if (c.conllu) require_path(*c.conllu, "conllu file");
            if (c.pred) require_path(*c.pred, "prediction file");
        }
        if (cfg.workers < 1) cfg.workers = 1;
        // Validate name spellings early.
        FeatureSubset::from_names(cfg.decoder_features);
        FeatureSubset::from_names(cfg.encoder_features);
        StructuralFilterSet::create(cfg.predicates);
        for (const auto& s : cfg.styles)
            if (s != "verbose" && s != "structured" && s != "encoder")
                throw ConfigError(path.string() + ": unknown style '" + s + "'");
        return cfg;
    }
};

// ---------------------------------------------------------------------------
// Bounded fan-out
// ---------------------------------------------------------------------------

inline int worker_cap_from_env() {
    const char* env = std::getenv("DISCOFORGE_WORKERS");
    if (!env) return 0;
    int v = 0;
    if (!parse_int(env, v) || v < 1) return 0;
    return v;
}

// Runs fn(i) for i in [0, n) on up to `workers` threads. Outputs must be
// written to preallocated per-index slots; the first exception wins and is
// rethrown after all threads join.
template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
    if (int cap = worker_cap_from_env(); cap > 0) workers = std::min(workers, cap);
    workers = static_cast<int>(std::min<std::size_t>(std::max(workers, 1), n));
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr first_error;
    std::mutex error_mutex;
    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        threads.emplace_back([&]() {
            while (true) {
                std::size_t i = next.fetch_add(1);
                if (i >= n) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(error_mutex);
                    if (!first_error) first_error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& t : threads) t.join();
    if (first_error) std::rethrow_exception(first_error);
}

// ---------------------------------------------------------------------------
// Loaded corpus
// ---------------------------------------------------------------------------

// A corpus with everything derived that later stages need: documents (parsed
// or synthesized from the .rels sentence columns), per-document unit
// inventories, and the genre of every instance's document.
struct LoadedCorpus {
    CorpusId id;
    RelsFile rels;
    std::vector<DocumentModel> docs;
    std::map<std::string, std::size_t> doc_index;       // doc id -> index in docs
    std::map<std::string, UnitInventory> units_by_doc;  // doc id -> inventory
    std::vector<std::string> genres;                    // per instance

    const DocumentModel& doc_for(const RelationInstance& inst) const {
        return docs[doc_index.at(inst.doc_id)];
    }
    const UnitInventory* units_for(const RelationInstance& inst) const {
        auto it = units_by_doc.find(inst.doc_id);
        return it == units_by_doc.end() ? nullptr : &it->second;
    }
};

inline LoadedCorpus load_corpus(const CorpusEntry& entry, const LabelInventory& inventory,
                                const std::map<std::string, std::string>& genre_overrides,
                                Diagnostics* diag = nullptr) {
    LoadedCorpus lc;
    lc.id = entry.id;
    lc.rels = parse_rels(entry.rels, entry.id, inventory, diag);
    if (entry.conllu) lc.docs = parse_conllu(*entry.conllu, diag);

    auto grouped = group_by_document(lc.rels.instances);
    std::set<std::string> known;
    for (const auto& d : lc.docs) known.insert(d.doc_id);
    for (const auto& [doc_id, rows] : grouped) {
        if (known.count(doc_id)) continue;
        if (entry.conllu && diag)
            diag->warn(entry.id.str() + ": document '" + doc_id +
                       "' missing from conllu, synthesizing from sentence columns");
        lc.docs.push_back(synthesize_document(doc_id, rows));
    }
    for (std::size_t i = 0; i < lc.docs.size(); ++i) {
        lc.docs[i].genre = infer_genre(lc.docs[i].doc_id, entry.id, genre_overrides);
        lc.doc_index[lc.docs[i].doc_id] = i;
    }
    for (const auto& [doc_id, rows] : grouped) lc.units_by_doc[doc_id] = UnitInventory::build(rows);
    for (const auto& inst : lc.rels.instances)
        lc.genres.push_back(lc.docs[lc.doc_index.at(inst.doc_id)].genre);
    return lc;
}

// ---------------------------------------------------------------------------
// Per-corpus stage work
// ---------------------------------------------------------------------------

inline std::string featurize_corpus_tsv(const LoadedCorpus& lc, const std::set<std::string>& stoplist) {
    std::string out = join(feature_tsv_header(), "\t");
    out += '\n';
    for (const auto& inst : lc.rels.instances) {
        FeatureVector fv =
            compute_features(inst, lc.doc_for(inst), lc.id, lc.units_for(inst), stoplist);
        out += feature_tsv_row(inst, fv);
        out += '\n';
    }
    return out;
}

struct BuildOutputs {
    std::vector<PromptRecord> verbose;
    std::vector<PromptRecord> structured;
    std::vector<EncoderRecord> encoder;
};

inline BuildOutputs build_corpus_records(const LoadedCorpus& lc, const PromptTemplate& tpl,
                                         const LabelInventory& inv,
                                         const FeatureSubset& decoder_subset,
                                         const FeatureSubset& encoder_subset,
                                         const std::set<std::string>& stoplist,
                                         const std::vector<std::string>& styles,
                                         Diagnostics* diag = nullptr) {
    BuildOutputs out;
    bool want_verbose = std::count(styles.begin(), styles.end(), "verbose") > 0;
    bool want_structured = std::count(styles.begin(), styles.end(), "structured") > 0;
    bool want_encoder = std::count(styles.begin(), styles.end(), "encoder") > 0;
    for (const auto& inst : lc.rels.instances) {
        if (!inst.label_known) {
            // Every emitted record must carry an in-inventory target.
            if (diag)
                diag->warn(lc.id.str() + "#" + std::to_string(inst.instance_id) +
                           ": label outside the inventory, instance not rendered");
            continue;
        }
        const DocumentModel& doc = lc.doc_for(inst);
        FeatureVector fv = compute_features(inst, doc, lc.id, lc.units_for(inst), stoplist);
        ContextWindow ctx = extract_context(inst, doc, diag);
        if (want_verbose)
            out.verbose.push_back(build_verbose_prompt(inst, fv, ctx, tpl, inv, decoder_subset));
        if (want_structured)
            out.structured.push_back(build_structured_prompt(inst, fv, ctx, inv, decoder_subset));
        if (want_encoder)
            out.encoder.push_back(build_encoder_input(inst, fv, ctx, encoder_subset, diag));
    }
    return out;
}

inline std::map<std::string, int> label_histogram(const std::vector<RelationInstance>& instances) {
    std::map<std::string, int> hist;
    for (const auto& inst : instances) ++hist[inst.label];
    return hist;
}

// ---------------------------------------------------------------------------
// Orchestrated run
// ---------------------------------------------------------------------------

enum class Stage { Validate, Featurize, Build, Augment, Score, All };

inline std::optional<Stage> stage_from(std::string_view s) {
    if (s == "validate") return Stage::Validate;
    if (s == "featurize") return Stage::Featurize;
    if (s == "build") return Stage::Build;
    if (s == "augment") return Stage::Augment;
    if (s == "score") return Stage::Score;
    if (s == "all") return Stage::All;
    return std::nullopt;
}

// Records what a run consumed and produced, keyed by path; digests make
// byte-level reproducibility checkable and let any single stage be re-run in
// isolation.
struct RunManifest {
    nlohmann::ordered_json json;

    explicit RunManifest(const RunConfig& cfg) {
        json["tool"] = std::string(kToolVersion);
        json["config_digest"] = cfg.config_digest;
        json["seeds"] = {{"sampling", cfg.sampling_seed}, {"repair", cfg.repair_seed}};
        json["stages"] = nlohmann::ordered_json::object();
    }

    void record(const std::string& stage, const std::string& kind, const fs::path& path,
                std::string_view bytes) {
        if (!json["stages"].contains(stage))
            json["stages"][stage] = {{"inputs", nlohmann::ordered_json::object()},
                                     {"outputs", nlohmann::ordered_json::object()}};
        json["stages"][stage][kind][path.string()] = fnv1a64_hex(bytes);
    }

    void record_input(const std::string& stage, const fs::path& path) {
        record(stage, "inputs", path, read_file(path));
    }

    std::string dump() const { return json.dump(2) + "\n"; }
};

namespace detail {

struct RunContext {
    const RunConfig& cfg;
    LabelInventory inventory;
    PromptTemplate tpl;
    std::map<std::string, std::string> genre_overrides;
    std::set<std::string> stoplist;
    std::vector<LoadedCorpus> corpora;
};

inline RunContext make_context(const RunConfig& cfg, Diagnostics& diag) {
    RunContext ctx{cfg,
                   LabelInventory::load(cfg.labels_path),
                   PromptTemplate::load(cfg.template_path),
                   {},
                   {},
                   {}};
    if (cfg.genre_overrides_path) ctx.genre_overrides = load_genre_overrides(*cfg.genre_overrides_path);
    if (cfg.stoplist_path) ctx.stoplist = load_stoplist(*cfg.stoplist_path);

    ctx.corpora.resize(cfg.corpora.size());
    std::vector<Diagnostics> local(cfg.corpora.size());
    parallel_for(cfg.corpora.size(), cfg.workers, [&](std::size_t i) {
        ctx.corpora[i] = load_corpus(cfg.corpora[i], ctx.inventory, ctx.genre_overrides, &local[i]);
    });
    for (auto& d : local) {
        for (auto& w : d.warnings) diag.warn(std::move(w));
        for (auto& e : d.errors) diag.error(std::move(e));
    }
    return ctx;
}

inline fs::path ensure_dir(const fs::path& dir) {
    fs::create_directories(dir);
    return dir;
}

inline void stage_featurize(const RunContext& ctx, RunManifest& manifest) {
    fs::path dir = ensure_dir(ctx.cfg.output_root / "featurize");
    std::vector<std::string> outputs(ctx.corpora.size());
    parallel_for(ctx.corpora.size(), ctx.cfg.workers, [&](std::size_t i) {
        outputs[i] = featurize_corpus_tsv(ctx.corpora[i], ctx.stoplist);
    });
    for (std::size_t i = 0; i < ctx.corpora.size(); ++i) {
        fs::path out = dir / (ctx.corpora[i].id.str() + ".features.tsv");
        write_file_atomic(out, outputs[i]);
        manifest.record_input("featurize", ctx.cfg.corpora[i].rels);
        if (ctx.cfg.corpora[i].conllu) manifest.record_input("featurize", *ctx.cfg.corpora[i].conllu);
        manifest.record("featurize", "outputs", out, outputs[i]);
    }
}

inline void stage_build(const RunContext& ctx, RunManifest& manifest, Diagnostics& diag) {
    fs::path dir = ensure_dir(ctx.cfg.output_root / "build");
    FeatureSubset decoder = FeatureSubset::from_names(ctx.cfg.decoder_features);
    FeatureSubset encoder = FeatureSubset::from_names(ctx.cfg.encoder_features);

    std::vector<BuildOutputs> outputs(ctx.corpora.size());
    std::vector<Diagnostics> local(ctx.corpora.size());
    parallel_for(ctx.corpora.size(), ctx.cfg.workers, [&](std::size_t i) {
        outputs[i] = build_corpus_records(ctx.corpora[i], ctx.tpl, ctx.inventory, decoder, encoder,
                                          ctx.stoplist, ctx.cfg.styles, &local[i]);
    });
    for (auto& d : local)
        for (auto& w : d.warnings) diag.warn(std::move(w));

    const char* ext = ctx.cfg.record_format == RecordFormat::Jsonl ? ".jsonl" : ".tsv";
    for (std::size_t i = 0; i < ctx.corpora.size(); ++i) {
        const std::string base = ctx.corpora[i].id.str();
        auto emit = [&](const auto& records, const char* style) {
            if (records.empty()) return;
            fs::path out = dir / (base + "." + style + ext);
            std::string bytes = render_records(records, ctx.cfg.record_format, &diag);
            write_file_atomic(out, bytes);
            manifest.record("build", "outputs", out, bytes);
        };
        emit(outputs[i].verbose, "verbose");
        emit(outputs[i].structured, "structured");
        emit(outputs[i].encoder, "encoder");
        manifest.record_input("build", ctx.cfg.corpora[i].rels);
        if (ctx.cfg.corpora[i].conllu) manifest.record_input("build", *ctx.cfg.corpora[i].conllu);
    }
    manifest.record_input("build", ctx.cfg.template_path);
    manifest.record_input("build", ctx.cfg.labels_path);
}

inline void stage_augment(const RunContext& ctx, RunManifest& manifest, Diagnostics& diag) {
    if (!ctx.cfg.mapping_path) {
        diag.warn("augment: no mapping configured, stage skipped");
        return;
    }
    fs::path dir = ensure_dir(ctx.cfg.output_root / "augment");
    auto mappings = load_mapping(*ctx.cfg.mapping_path);
    manifest.record_input("augment", *ctx.cfg.mapping_path);

    auto find_corpus = [&](const CorpusId& id) -> const LoadedCorpus* {
        for (const auto& lc : ctx.corpora)
            if (lc.id == id) return &lc;
        return nullptr;
    };

    std::set<std::string> pronouns = ctx.cfg.pronouns_path
                                         ? load_pronoun_list(*ctx.cfg.pronouns_path)
                                         : StructuralFilterSet::default_pronouns();
    StructuralFilterSet filters = StructuralFilterSet::create(ctx.cfg.predicates, pronouns);

    for (const auto& mapping : mappings) {
        const LoadedCorpus* target = find_corpus(mapping.target);
        if (!target) continue;  // mapping rows outside this run's corpora are inert

        std::vector<SourcePool> pools;
        std::vector<SourceData> data;
        bool sources_ok = true;
        for (const auto& src_id : mapping.sources) {
            const LoadedCorpus* src = find_corpus(src_id);
            if (!src) {
                diag.warn("augment " + mapping.target.str() + ": source " + src_id.str() +
                          " not configured, skipping this mapping");
                sources_ok = false;
                break;
            }
            pools.push_back(SourcePool{src->id, &src->rels.instances, src->genres});
            data.push_back(SourceData{src->id, &src->rels.instances, &src->docs});
        }
        if (!sources_ok) continue;

        for (std::size_t i = 0; i < ctx.corpora.size(); ++i) {
            bool involved = ctx.corpora[i].id == mapping.target;
            for (const auto& src_id : mapping.sources) involved |= ctx.corpora[i].id == src_id;
            if (involved) manifest.record_input("augment", ctx.cfg.corpora[i].rels);
        }

        AugmentationPlan plan = plan_augmentation(
            mapping, pools, label_histogram(target->rels.instances),
            static_cast<int>(target->rels.instances.size()), ctx.cfg.sampling_seed, filters, &diag);
        std::string plan_bytes = plan_to_json(plan).dump(2) + "\n";
        fs::path plan_path = dir / (mapping.target.str() + ".plan.json");
        write_file_atomic(plan_path, plan_bytes);
        manifest.record("augment", "outputs", plan_path, plan_bytes);

        TranslationBatch batch = emit_translation_batch(plan, data, ctx.cfg.batch_context);
        std::string batch_bytes = serialize_translation_batch(batch, &diag);
        fs::path batch_path = dir / (mapping.target.str() + ".batch.tsv");
        write_file_atomic(batch_path, batch_bytes);
        manifest.record("augment", "outputs", batch_path, batch_bytes);
    }
}

inline void stage_score(const RunContext& ctx, RunManifest& manifest, Diagnostics& diag) {
    fs::path dir = ensure_dir(ctx.cfg.output_root / "score");
    EvalReport report;
    report.repair_seed = ctx.cfg.repair_seed;
    std::map<std::string, int> repairs_by_corpus;
    bool any = false;
    for (std::size_t i = 0; i < ctx.corpora.size(); ++i) {
        const auto& entry = ctx.cfg.corpora[i];
        if (!entry.pred) continue;
        any = true;
        PredictionFile pred = PredictionFile::load(*entry.pred);
        RepairResult repaired = repair_labels(pred.labels, ctx.inventory, ctx.cfg.repair_seed);
        pred.labels = repaired.labels;
        report.repairs += repaired.repairs;
        repairs_by_corpus[entry.id.str()] = repaired.repairs;
        report.per_corpus[entry.id.str()] = score_corpus(ctx.corpora[i].rels.instances, pred);
        manifest.record_input("score", entry.rels);
        manifest.record_input("score", *entry.pred);
    }
    if (!any) {
        diag.warn("score: no prediction files configured, stage skipped");
        return;
    }
    report.recompute_aggregates();

    std::string summary = "corpus\tcorrect\ttotal\taccuracy\n";
    for (const auto& [id, s] : report.per_corpus) {
        summary += id + "\t" + std::to_string(s.correct) + "\t" + std::to_string(s.total) + "\t" +
                   percent_str(s.accuracy) + "\n";
        EvalReport single;
        single.repair_seed = report.repair_seed;
        single.repairs = repairs_by_corpus[id];
        single.per_corpus[id] = s;
        single.recompute_aggregates();
        std::string bytes = report_to_json(single).dump(2) + "\n";
        fs::path out = dir / (id + ".report.json");
        write_file_atomic(out, bytes);
        manifest.record("score", "outputs", out, bytes);
    }
    summary += "macro_average\t\t\t" + percent_str(report.macro) + "\n";
    summary += "micro_average\t\t\t" + percent_str(report.micro) + "\n";
    fs::path sum_path = dir / "summary.tsv";
    write_file_atomic(sum_path, summary);
    manifest.record("score", "outputs", sum_path, summary);
}

}  // namespace detail

// Executes one stage (or all, in dependency order) and writes the run
// manifest. Returns the process exit code: 0 on success, 1 when validation
// found structural errors.
inline int run_stages(const RunConfig& cfg, Stage stage, Diagnostics& diag) {
    detail::RunContext ctx = detail::make_context(cfg, diag);
    detail::ensure_dir(cfg.output_root);
    RunManifest manifest(cfg);

    for (const auto& entry : cfg.corpora) {
        manifest.record_input("validate", entry.rels);
        if (entry.conllu) manifest.record_input("validate", *entry.conllu);
    }

    if (stage == Stage::Validate) {
        // Loading already surfaced structural errors into diag.
    }
    if (stage == Stage::Featurize || stage == Stage::All) detail::stage_featurize(ctx, manifest);
    if (stage == Stage::Build || stage == Stage::All) detail::stage_build(ctx, manifest, diag);
    if (stage == Stage::Augment || stage == Stage::All) detail::stage_augment(ctx, manifest, diag);
    if (stage == Stage::Score || stage == Stage::All) detail::stage_score(ctx, manifest, diag);

    write_file_atomic(cfg.output_root / "manifest.json", manifest.dump());
    return diag.ok() ? 0 : 1;
}

}  // namespace discoforge
