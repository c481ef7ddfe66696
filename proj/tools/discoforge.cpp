// discoforge: corpus-to-model-input and evaluation toolkit for multilingual
// discourse relation classification datasets.

#include <algorithm>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "discoforge/augment.hpp"
#include "discoforge/corpus.hpp"
#include "discoforge/evaluation.hpp"
#include "discoforge/features.hpp"
#include "discoforge/pipeline.hpp"
#include "discoforge/prompts.hpp"
#include "discoforge/pruning.hpp"

namespace df = discoforge;
namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitRuntime = 2;

void print_diagnostics(const df::Diagnostics& diag) {
    for (const auto& w : diag.warnings) std::cerr << "warning: " << w << "\n";
    for (const auto& e : diag.errors) std::cerr << "error: " << e << "\n";
}

// "eng.erst.gum_train.rels" -> "eng.erst.gum"
std::optional<df::CorpusId> corpus_id_from_filename(const fs::path& path) {
    std::string stem = path.filename().string();
    std::size_t underscore = stem.find('_');
    if (underscore != std::string::npos) stem = stem.substr(0, underscore);
    else if (auto dot = stem.rfind(".rels"); dot != std::string::npos) stem = stem.substr(0, dot);
    try {
        return df::CorpusId::parse(stem);
    } catch (const df::Error&) {
        return std::nullopt;
    }
}

df::CorpusId resolve_corpus_id(const std::string& flag, const fs::path& rels) {
    if (!flag.empty()) return df::CorpusId::parse(flag);
    if (auto id = corpus_id_from_filename(rels)) return *id;
    throw df::ConfigError("cannot infer corpus id from '" + rels.string() +
                          "', pass --corpus language.framework.corpus");
}

// Inventory for commands where one is optional: fall back to the file's own
// label set so every label is "known".
df::LabelInventory inventory_or_file_labels(const std::string& labels_flag, const fs::path& rels) {
    if (!labels_flag.empty()) return df::LabelInventory::load(labels_flag);
    std::vector<std::string> seen;
    std::set<std::string> unique;
    for (const auto& line : df::split(df::read_file(rels), '\n')) {
        auto fields = df::split(line, '\t');
        if (fields.size() < 2) continue;
        std::string label = df::to_lower_ascii(df::trim(fields.back()));
        if (!label.empty() && unique.insert(label).second) seen.push_back(label);
    }
    if (seen.empty()) seen.push_back("unknown");
    return df::LabelInventory::from_labels(seen);
}

struct SourceSpec {
    df::CorpusId id;
    fs::path rels;
    std::optional<fs::path> conllu;
};

// --source corpus=rels[,conllu], repeatable
std::vector<SourceSpec> parse_source_specs(const std::vector<std::string>& raw) {
    std::vector<SourceSpec> out;
    for (const auto& spec : raw) {
        auto eq = spec.find('=');
        if (eq == std::string::npos)
            throw df::ConfigError("--source expects corpus=rels[,conllu], got: " + spec);
        SourceSpec s;
        s.id = df::CorpusId::parse(spec.substr(0, eq));
        auto paths = df::split(spec.substr(eq + 1), ',');
        if (paths.empty() || paths[0].empty())
            throw df::ConfigError("--source expects corpus=rels[,conllu], got: " + spec);
        s.rels = paths[0];
        if (paths.size() > 1 && !paths[1].empty()) s.conllu = paths[1];
        out.push_back(std::move(s));
    }
    return out;
}

df::LoadedCorpus load_for_cli(const df::CorpusId& id, const fs::path& rels,
                              const std::optional<fs::path>& conllu, const df::LabelInventory& inv,
                              const std::map<std::string, std::string>& overrides,
                              df::Diagnostics* diag) {
    df::CorpusEntry entry;
    entry.id = id;
    entry.rels = rels;
    entry.conllu = conllu;
    return df::load_corpus(entry, inv, overrides, diag);
}

// Flag overrides applied on top of a loaded config, filled in by main().
struct ConfigOverrides {
    int workers = 0;          // 0: keep config value
    std::string output_root;  // empty: keep config value
};
ConfigOverrides cli_overrides;

int run_config_stage(const std::string& config_path, df::Stage stage) {
    df::RunConfig cfg = df::RunConfig::load(config_path);
    if (cli_overrides.workers > 0) cfg.workers = cli_overrides.workers;
    if (!cli_overrides.output_root.empty()) cfg.output_root = cli_overrides.output_root;
    df::Diagnostics diag;
    int code = df::run_stages(cfg, stage, diag);
    print_diagnostics(diag);
    return code;
}

// ---------------------------------------------------------------------------
// validate
// ---------------------------------------------------------------------------

int cmd_validate(const std::string& config, const std::string& rels, const std::string& conllu,
                 const std::string& labels, const std::string& corpus) {
    if (!config.empty()) return run_config_stage(config, df::Stage::Validate);

    // Any failure here is a validation failure, including file-level ones
    // that abort parsing outright (missing file, absent required column).
    try {
        df::CorpusId id = resolve_corpus_id(corpus, rels);
        df::LabelInventory inv = inventory_or_file_labels(labels, rels);
        df::Diagnostics diag;
        df::RelsFile file = df::parse_rels(rels, id, inv, &diag);
        if (!conllu.empty()) df::parse_conllu(conllu, &diag);
        print_diagnostics(diag);
        std::cout << id.str() << ": " << file.instances.size() << " instances, "
                  << diag.errors.size() << " errors, " << diag.warnings.size() << " warnings\n";
        return diag.ok() ? kExitOk : kExitValidation;
    } catch (const df::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    }
}

// ---------------------------------------------------------------------------
// featurize
// ---------------------------------------------------------------------------

int cmd_featurize(const std::string& config, const std::string& rels, const std::string& conllu,
                  const std::string& out, const std::string& labels, const std::string& corpus,
                  const std::string& stoplist, const std::string& overrides_path) {
    if (!config.empty()) return run_config_stage(config, df::Stage::Featurize);
    if (rels.empty() || out.empty())
        throw df::ConfigError("featurize needs --rels and --out (or --config)");

    df::CorpusId id = resolve_corpus_id(corpus, rels);
    df::LabelInventory inv = inventory_or_file_labels(labels, rels);
    std::map<std::string, std::string> overrides;
    if (!overrides_path.empty()) overrides = df::load_genre_overrides(overrides_path);
    std::set<std::string> stop;
    if (!stoplist.empty()) stop = df::load_stoplist(stoplist);

    df::Diagnostics diag;
    df::LoadedCorpus lc = load_for_cli(id, rels,
                                       conllu.empty() ? std::nullopt
                                                      : std::optional<fs::path>(conllu),
                                       inv, overrides, &diag);
    df::write_file_atomic(out, df::featurize_corpus_tsv(lc, stop));
    print_diagnostics(diag);
    std::cout << "wrote " << out << " (" << lc.rels.instances.size() << " rows)\n";
    return diag.ok() ? kExitOk : kExitValidation;
}

// ---------------------------------------------------------------------------
// build
// ---------------------------------------------------------------------------

int cmd_build(const std::string& config, const std::string& style, const std::string& rels,
              const std::string& conllu, const std::string& template_path,
              const std::string& labels, const std::string& out, const std::string& format,
              const std::string& corpus, const std::vector<std::string>& features,
              const std::string& overrides_path, const std::string& stoplist) {
    if (!config.empty()) return run_config_stage(config, df::Stage::Build);
    if (style.empty() || rels.empty() || labels.empty() || out.empty())
        throw df::ConfigError("build needs --style, --rels, --labels and --out (or --config)");
    if (style != "verbose" && style != "structured" && style != "encoder")
        throw df::ConfigError("--style must be verbose, structured or encoder");
    if (style == "verbose" && template_path.empty())
        throw df::ConfigError("--style verbose needs --template");

    auto fmt = df::record_format_from(format);
    if (!fmt) throw df::ConfigError("--format must be jsonl or tsv");

    df::CorpusId id = resolve_corpus_id(corpus, rels);
    df::LabelInventory inv = df::LabelInventory::load(labels);
    std::map<std::string, std::string> overrides;
    if (!overrides_path.empty()) overrides = df::load_genre_overrides(overrides_path);
    std::set<std::string> stop;
    if (!stoplist.empty()) stop = df::load_stoplist(stoplist);

    df::FeatureSubset subset = features.empty()
                                   ? (style == "encoder" ? df::FeatureSubset::encoder_default()
                                                         : df::FeatureSubset::decoder_default())
                                   : df::FeatureSubset::from_names(features);

    df::PromptTemplate tpl =
        template_path.empty() ? df::PromptTemplate{"none", "{ARG1}{ARG2}{LABEL_LIST}"}
                              : df::PromptTemplate::load(template_path);

    df::Diagnostics diag;
    df::LoadedCorpus lc = load_for_cli(id, rels,
                                       conllu.empty() ? std::nullopt
                                                      : std::optional<fs::path>(conllu),
                                       inv, overrides, &diag);

    df::BuildOutputs records = df::build_corpus_records(lc, tpl, inv, subset, subset, stop,
                                                        {style}, &diag);
    std::size_t count = 0;
    if (style == "verbose") {
        df::emit_records(records.verbose, *fmt, out, &diag);
        count = records.verbose.size();
    } else if (style == "structured") {
        df::emit_records(records.structured, *fmt, out, &diag);
        count = records.structured.size();
    } else {
        df::emit_records(records.encoder, *fmt, out, &diag);
        count = records.encoder.size();
    }
    print_diagnostics(diag);
    std::cout << "wrote " << out << " (" << count << " records, style " << style << ")\n";
    return diag.ok() ? kExitOk : kExitValidation;
}

// ---------------------------------------------------------------------------
// augment plan / emit / merge
// ---------------------------------------------------------------------------

struct LoadedSources {
    std::vector<df::LoadedCorpus> corpora;
    std::vector<df::SourcePool> pools;
    std::vector<df::SourceData> data;
};

LoadedSources load_sources(const std::vector<SourceSpec>& specs, const df::LabelInventory& inv,
                           const std::map<std::string, std::string>& overrides,
                           df::Diagnostics* diag) {
    LoadedSources out;
    out.corpora.reserve(specs.size());
    for (const auto& spec : specs)
        out.corpora.push_back(load_for_cli(spec.id, spec.rels, spec.conllu, inv, overrides, diag));
    for (const auto& lc : out.corpora) {
        out.pools.push_back(df::SourcePool{lc.id, &lc.rels.instances, lc.genres});
        out.data.push_back(df::SourceData{lc.id, &lc.rels.instances, &lc.docs});
    }
    return out;
}

const df::AugmentationMapping& mapping_for_target(const std::vector<df::AugmentationMapping>& rows,
                                                  const df::CorpusId& target) {
    for (const auto& m : rows)
        if (m.target == target) return m;
    throw df::ConfigError("mapping has no row for target " + target.str());
}

int cmd_augment_plan(const std::string& mapping_path, const std::string& target,
                     const std::string& target_rels, const std::vector<std::string>& sources,
                     const std::string& labels, std::uint64_t seed, const std::string& out,
                     const std::string& pronouns_path,
                     const std::vector<std::string>& predicates) {
    auto mappings = df::load_mapping(mapping_path);
    df::CorpusId target_id = df::CorpusId::parse(target);
    const df::AugmentationMapping& mapping = mapping_for_target(mappings, target_id);

    df::LabelInventory inv = inventory_or_file_labels(labels, target_rels);
    df::Diagnostics diag;
    df::RelsFile target_file = df::parse_rels(target_rels, target_id, inv, &diag);

    LoadedSources src = load_sources(parse_source_specs(sources), inv, {}, &diag);

    std::set<std::string> pronoun_set = pronouns_path.empty()
                                            ? df::StructuralFilterSet::default_pronouns()
                                            : df::load_pronoun_list(pronouns_path);
    df::StructuralFilterSet filters = df::StructuralFilterSet::create(predicates, pronoun_set);

    df::AugmentationPlan plan = df::plan_augmentation(
        mapping, src.pools, df::label_histogram(target_file.instances),
        static_cast<int>(target_file.instances.size()), seed, filters, &diag);

    df::write_file_atomic(out, df::plan_to_json(plan).dump(2) + "\n");
    print_diagnostics(diag);
    std::cout << "plan for " << target_id.str() << ": " << plan.selected.size()
              << " instances selected (seed " << seed << ")\n";
    return kExitOk;
}

int cmd_augment_emit(const std::string& plan_path, const std::vector<std::string>& sources,
                     const std::string& out, bool context) {
    df::AugmentationPlan plan = df::load_plan(plan_path);
    df::Diagnostics diag;
    df::LabelInventory inv = df::LabelInventory::from_labels({"unknown"});
    // Source labels are irrelevant for batch emission; parse leniently.
    LoadedSources src = load_sources(parse_source_specs(sources), inv, {}, nullptr);
    df::TranslationBatch batch = df::emit_translation_batch(plan, src.data, context);
    df::write_file_atomic(out, df::serialize_translation_batch(batch, &diag));
    print_diagnostics(diag);
    std::cout << "batch for " << plan.mapping.target.str() << ": " << batch.rows.size()
              << " rows\n";
    return kExitOk;
}

int cmd_augment_merge(const std::string& plan_path, const std::string& batch_path,
                      const std::vector<std::string>& sources, const std::string& out_dir) {
    df::AugmentationPlan plan = df::load_plan(plan_path);
    df::TranslationBatch batch = df::parse_translation_batch(batch_path);
    df::LabelInventory inv = df::LabelInventory::from_labels({"unknown"});
    LoadedSources src = load_sources(parse_source_specs(sources), inv, {}, nullptr);

    std::vector<df::RelationInstance> merged = df::merge_translations(plan, batch, src.data);
    fs::create_directories(out_dir);
    fs::path out = fs::path(out_dir) / df::augmented_rels_filename(plan.mapping.target);
    df::Diagnostics diag;
    df::write_file_atomic(out, df::serialize_rels(merged, df::rels_columns::standard_header(), &diag));
    print_diagnostics(diag);
    std::cout << "wrote " << out.string() << " (" << merged.size() << " augmented instances)\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// prune-select
// ---------------------------------------------------------------------------

int cmd_prune_select(const std::string& manifest_path, int k, const std::string& protect) {
    auto entries = df::parse_dump_manifest(manifest_path);
    if (entries.empty()) throw df::DumpFormatError(manifest_path + ": no layers listed");

    std::set<int> protected_layers;
    if (protect == "default") {
        int lo = entries.front().layer_index, hi = entries.front().layer_index;
        for (const auto& e : entries) {
            lo = std::min(lo, e.layer_index);
            hi = std::max(hi, e.layer_index);
        }
        protected_layers = {lo, hi};
    } else if (protect != "none" && !protect.empty()) {
        for (const auto& piece : df::split(protect, ',')) {
            int v = 0;
            if (!df::parse_int(df::trim(piece), v))
                throw df::ConfigError("--protect expects a comma-separated layer list");
            protected_layers.insert(v);
        }
    }

    df::Diagnostics diag;
    std::vector<df::LayerScore> scores;
    for (const auto& e : entries) scores.push_back(df::block_influence(df::load_dump(e), &diag));

    std::vector<df::LayerScore> ranked = scores;
    std::sort(ranked.begin(), ranked.end(), [](const df::LayerScore& a, const df::LayerScore& b) {
        if (a.influence != b.influence) return a.influence < b.influence;
        return a.layer_index < b.layer_index;
    });
    std::cout << "layer\tinfluence\tprotected\n";
    for (const auto& s : ranked)
        std::cout << s.layer_index << "\t" << df::format_double(s.influence) << "\t"
                  << (protected_layers.count(s.layer_index) ? "yes" : "no") << "\n";

    std::vector<int> selected = df::select_prune_layers(scores, k, protected_layers);
    std::vector<std::string> rendered;
    for (int layer : selected) rendered.push_back(std::to_string(layer));
    std::cout << "selected: " << df::join(rendered, ",") << "\n";
    print_diagnostics(diag);
    return kExitOk;
}

// ---------------------------------------------------------------------------
// score / report
// ---------------------------------------------------------------------------

int cmd_score(const std::string& config, const std::string& gold, const std::string& pred,
              const std::string& labels, std::uint64_t seed, const std::string& corpus,
              const std::string& report_path, const std::string& confusion_path) {
    if (!config.empty()) return run_config_stage(config, df::Stage::Score);
    if (gold.empty() || pred.empty())
        throw df::ConfigError("score needs --gold and --pred (or --config)");

    df::CorpusId id = resolve_corpus_id(corpus, gold);
    df::LabelInventory inv = inventory_or_file_labels(labels, gold);
    df::Diagnostics diag;
    df::RelsFile gold_file = df::parse_rels(gold, id, inv, &diag);

    df::PredictionFile predictions = df::PredictionFile::load(pred);
    df::RepairResult repaired = df::repair_labels(predictions.labels, inv, seed);
    predictions.labels = repaired.labels;

    df::CorpusScore score = df::score_corpus(gold_file.instances, predictions);
    std::cout << id.str() << "\t" << score.correct << "/" << score.total << "\t"
              << df::percent_str(score.accuracy) << "\trepairs=" << repaired.repairs << "\n";

    // A machine-readable report is always written; --report moves it.
    fs::path report_out = report_path.empty() ? fs::path(pred + ".report.json")
                                              : fs::path(report_path);
    df::EvalReport report;
    report.repair_seed = seed;
    report.repairs = repaired.repairs;
    report.per_corpus[id.str()] = score;
    report.recompute_aggregates();
    df::write_file_atomic(report_out, df::report_to_json(report).dump(2) + "\n");
    if (!confusion_path.empty()) {
        df::ConfusionMatrix m = df::confusion_to_matrix(score.confusion, inv);
        df::write_file_atomic(confusion_path, df::confusion_tsv(m, false));
        df::write_file_atomic(confusion_path + ".normalized", df::confusion_tsv(m, true));
    }
    print_diagnostics(diag);
    return diag.ok() ? kExitOk : kExitValidation;
}

df::EvalReport load_report_dir(const std::string& dir) {
    df::EvalReport merged;
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        std::string name = entry.path().filename().string();
        if (name.size() > 12 && name.substr(name.size() - 12) == ".report.json")
            files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw df::ConfigError(dir + ": no *.report.json files");
    for (const auto& f : files) {
        df::EvalReport one = df::load_report(f);
        merged.repair_seed = one.repair_seed;
        merged.repairs += one.repairs;
        for (auto& [id, s] : one.per_corpus) merged.per_corpus[id] = std::move(s);
    }
    merged.recompute_aggregates();
    return merged;
}

int cmd_report(const std::string& baseline_dir, const std::string& ablated_dir,
               const std::string& out) {
    df::EvalReport baseline = load_report_dir(baseline_dir);
    df::EvalReport ablated = load_report_dir(ablated_dir);
    df::AblationReport report = df::ablation_report(baseline, ablated);
    std::string tsv = df::ablation_tsv(report);
    if (out.empty())
        std::cout << tsv;
    else
        df::write_file_atomic(out, tsv);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"corpus, feature, prompt, augmentation and scoring toolkit for "
                 "multilingual discourse relation classification"};
    app.set_version_flag("--version", std::string(df::kToolVersion));
    app.require_subcommand(1);

    // Shared option storage. Subcommands bind to the subset they use.
    std::string config, rels, conllu, labels, corpus, out, style, template_path;
    std::string format = "jsonl", stoplist, overrides_path;
    std::vector<std::string> features;

    auto add_config_overrides = [&](CLI::App* cmd) {
        cmd->add_option("--workers", cli_overrides.workers, "override the config worker count");
        cmd->add_option("--output-root", cli_overrides.output_root,
                        "override the config output root");
    };

    auto* validate = app.add_subcommand("validate", "structurally check .rels/.conllu files");
    validate->add_option("--config", config, "run config (json)");
    add_config_overrides(validate);
    validate->add_option("--rels", rels, ".rels file");
    validate->add_option("--conllu", conllu, "companion .conllu file");
    validate->add_option("--labels", labels, "label inventory file");
    validate->add_option("--corpus", corpus, "corpus id (language.framework.corpus)");

    auto* featurize = app.add_subcommand("featurize", "compute per-instance feature rows");
    featurize->add_option("--config", config, "run config (json)");
    add_config_overrides(featurize);
    featurize->add_option("--rels", rels, ".rels file");
    featurize->add_option("--conllu", conllu, "companion .conllu file");
    featurize->add_option("--out", out, "output feature tsv");
    featurize->add_option("--labels", labels, "label inventory file");
    featurize->add_option("--corpus", corpus, "corpus id");
    featurize->add_option("--stoplist", stoplist, "stoplist file (one token per line)");
    featurize->add_option("--genre-overrides", overrides_path, "corpus genre override tsv");

    auto* build = app.add_subcommand("build", "render model-input records");
    build->add_option("--config", config, "run config (json)");
    add_config_overrides(build);
    build->add_option("--style", style, "verbose | structured | encoder");
    build->add_option("--rels", rels, ".rels file");
    build->add_option("--conllu", conllu, "companion .conllu file");
    build->add_option("--template", template_path, "verbose prompt template");
    build->add_option("--labels", labels, "label inventory file");
    build->add_option("--out", out, "output records file");
    build->add_option("--format", format, "jsonl | tsv (default jsonl)");
    build->add_option("--corpus", corpus, "corpus id");
    build->add_option("--features", features, "feature subset override")->delimiter(',');
    build->add_option("--genre-overrides", overrides_path, "corpus genre override tsv");
    build->add_option("--stoplist", stoplist, "stoplist file");

    auto* augment = app.add_subcommand("augment", "translate-train augmentation");
    augment->add_option("--config", config, "run config (json): plans and emits batches");
    add_config_overrides(augment);
    std::string mapping_path, target, target_rels, plan_path, batch_path, out_dir, pronouns_path;
    std::vector<std::string> sources, predicates = {"relative_clause_unit"};
    std::uint64_t seed = 0;
    bool batch_ctx = false;

    auto* plan_cmd = augment->add_subcommand("plan", "select source instances for a target");
    plan_cmd->add_option("--mapping", mapping_path, "mapping config")->required();
    plan_cmd->add_option("--target", target, "target corpus id")->required();
    plan_cmd->add_option("--target-rels", target_rels, "target training .rels")->required();
    plan_cmd->add_option("--source", sources, "source corpus=rels[,conllu] (repeatable)")
        ->required();
    plan_cmd->add_option("--labels", labels, "label inventory file");
    plan_cmd->add_option("--seed", seed, "sampling seed")->required();
    plan_cmd->add_option("--out", out, "output plan json")->required();
    plan_cmd->add_option("--pronouns", pronouns_path, "relative pronoun list");
    plan_cmd->add_option("--predicates", predicates, "structural predicates")->delimiter(',');

    auto* emit_cmd = augment->add_subcommand("emit", "write the translation batch for a plan");
    emit_cmd->add_option("--plan", plan_path, "plan json")->required();
    emit_cmd->add_option("--source", sources, "source corpus=rels[,conllu] (repeatable)")
        ->required();
    emit_cmd->add_option("--out", out, "output batch tsv")->required();
    emit_cmd->add_flag("--context", batch_ctx, "include sentence/context fields");

    auto* merge_cmd = augment->add_subcommand("merge", "assemble augmented .rels from a batch");
    merge_cmd->add_option("--plan", plan_path, "plan json")->required();
    merge_cmd->add_option("--batch", batch_path, "completed batch tsv")->required();
    merge_cmd->add_option("--source", sources, "source corpus=rels[,conllu] (repeatable)")
        ->required();
    merge_cmd->add_option("--out", out_dir, "output directory")->required();

    auto* prune = app.add_subcommand("prune-select", "rank layers by block influence");
    std::string dump_manifest, protect = "default";
    int k = 1;
    prune->add_option("--manifest", dump_manifest, "activation dump manifest")->required();
    prune->add_option("--k", k, "layers to select (default 1)");
    prune->add_option("--protect", protect,
                      "comma-separated protected layers, 'default' (first+last) or 'none'");

    auto* score = app.add_subcommand("score", "score predictions against gold");
    std::string gold, pred, report_path, confusion_path;
    score->add_option("--config", config, "run config (json)");
    add_config_overrides(score);
    score->add_option("--gold", gold, "gold .rels file");
    score->add_option("--pred", pred, "prediction file (label per line, optional id column)");
    score->add_option("--labels", labels, "label inventory file");
    score->add_option("--seed", seed, "label repair seed");
    score->add_option("--corpus", corpus, "corpus id");
    score->add_option("--report", report_path, "machine-readable report json");
    score->add_option("--confusion", confusion_path, "confusion matrix tsv");

    auto* report = app.add_subcommand("report", "ablation table from two report directories");
    std::string baseline_dir, ablated_dir;
    report->add_option("--baseline", baseline_dir, "directory of baseline *.report.json")
        ->required();
    report->add_option("--ablated", ablated_dir, "directory of ablated *.report.json")->required();
    report->add_option("--out", out, "output tsv (stdout when omitted)");

    auto* run_all = app.add_subcommand("all", "run every stage from a config");
    run_all->add_option("--config", config, "run config (json)")->required();
    add_config_overrides(run_all);

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand(validate))
            return cmd_validate(config, rels, conllu, labels, corpus);
        if (app.got_subcommand(featurize))
            return cmd_featurize(config, rels, conllu, out, labels, corpus, stoplist,
                                 overrides_path);
        if (app.got_subcommand(build))
            return cmd_build(config, style, rels, conllu, template_path, labels, out, format,
                             corpus, features, overrides_path, stoplist);
        if (app.got_subcommand(augment)) {
            if (augment->got_subcommand(plan_cmd))
                return cmd_augment_plan(mapping_path, target, target_rels, sources, labels, seed,
                                        out, pronouns_path, predicates);
            if (augment->got_subcommand(emit_cmd))
                return cmd_augment_emit(plan_path, sources, out, batch_ctx);
            if (augment->got_subcommand(merge_cmd))
                return cmd_augment_merge(plan_path, batch_path, sources, out_dir);
            if (!config.empty()) return run_config_stage(config, df::Stage::Augment);
            throw df::ConfigError("augment needs a subcommand (plan|emit|merge) or --config");
        }
        if (app.got_subcommand(prune)) return cmd_prune_select(dump_manifest, k, protect);
        if (app.got_subcommand(score))
            return cmd_score(config, gold, pred, labels, seed, corpus, report_path,
                             confusion_path);
        if (app.got_subcommand(report)) return cmd_report(baseline_dir, ablated_dir, out);
        if (app.got_subcommand(run_all)) return run_config_stage(config, df::Stage::All);
    } catch (const df::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const df::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitOk;
}
