#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

#include "discoforge/corpus.hpp"
#include "discoforge/errors.hpp"
#include "discoforge/io.hpp"
#include "discoforge/rng.hpp"
#include "discoforge/text.hpp"

namespace discoforge {

// ---------------------------------------------------------------------------
// Prediction files
// ---------------------------------------------------------------------------

// One predicted label per line, either bare or as "id<TAB>label". When ids
// are present they must match the gold instance ids.
struct PredictionFile {
    std::vector<std::string> labels;
    std::vector<std::optional<int>> ids;  // parallel to labels

    static PredictionFile load(const fs::path& path) {
        PredictionFile out;
        std::vector<std::string> lines = split_lines(read_file(path));
        if (!lines.empty() && lines.back().empty()) lines.pop_back();
        for (std::size_t i = 0; i < lines.size(); ++i) {
            const std::string& line = lines[i];
            if (trim(line).empty()) continue;
            auto fields = split(line, '\t');
            if (fields.size() == 1) {
                out.labels.push_back(fields[0]);
                out.ids.push_back(std::nullopt);
            } else {
                int id = 0;
                if (!parse_int(trim(fields[0]), id))
                    throw EvalFormatError(path.string() + ":" + std::to_string(i + 1) +
                                          ": first column is not an integer id");
                out.labels.push_back(fields[1]);
                out.ids.push_back(id);
            }
        }
        return out;
    }
};

// ---------------------------------------------------------------------------
// Label repair
// ---------------------------------------------------------------------------

struct RepairResult {
    std::vector<std::string> labels;
    int repairs = 0;
};

// Canonicalizes predicted labels against the inventory (trim + case-fold);
// anything that still fails to match is replaced by a seeded uniform draw.
// Idempotent on valid input and deterministic for a given seed.
inline RepairResult repair_labels(const std::vector<std::string>& raw, const LabelInventory& inv,
                                  std::uint64_t seed) {
    RepairResult out;
    out.labels.reserve(raw.size());
    SplitMix64 rng(seed);
    for (const auto& r : raw) {
        if (auto canon = inv.canonical(r)) {
            out.labels.push_back(*canon);
        } else {
            out.labels.push_back(inv.labels[rng.below(inv.labels.size())]);
            ++out.repairs;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Scoring
// ---------------------------------------------------------------------------

using ConfusionCounts = std::map<std::pair<std::string, std::string>, long>;  // (gold, pred)

struct CorpusScore {
    long correct = 0;
    long total = 0;
    double accuracy = 0.0;  // percent, unrounded
    ConfusionCounts confusion;
};

// Accuracy over one corpus. Predictions must already be repaired; when they
// carry ids those are checked against the gold ordinals.
inline CorpusScore score_corpus(const std::vector<RelationInstance>& gold,
                                const PredictionFile& pred) {
    if (gold.size() != pred.labels.size()) throw LengthMismatchError(gold.size(), pred.labels.size());
    CorpusScore score;
    score.total = static_cast<long>(gold.size());
    for (std::size_t i = 0; i < gold.size(); ++i) {
        if (pred.ids[i] && *pred.ids[i] != gold[i].instance_id)
            throw EvalFormatError("prediction id " + std::to_string(*pred.ids[i]) +
                                  " does not match gold instance " +
                                  std::to_string(gold[i].instance_id));
        const std::string& g = gold[i].label;
        const std::string& p = pred.labels[i];
        if (g == p) ++score.correct;
        ++score.confusion[{g, p}];
    }
    score.accuracy = score.total > 0 ? 100.0 * score.correct / score.total : 0.0;
    return score;
}

// ---------------------------------------------------------------------------
// Aggregation
// ---------------------------------------------------------------------------

struct AggregateResult {
    double macro = 0.0;  // unweighted mean of per-corpus accuracies
    double micro = 0.0;  // pooled instance-level accuracy
};

struct CorpusAccuracy {
    long correct = 0;
    long total = 0;
    double accuracy = 0.0;
};

inline AggregateResult aggregate(const std::vector<CorpusAccuracy>& per_corpus) {
    if (per_corpus.empty()) throw Error("aggregate: need at least one corpus");
    AggregateResult out;
    double acc_sum = 0.0;
    long long correct = 0, total = 0;
    for (const auto& c : per_corpus) {
        acc_sum += c.accuracy;
        correct += c.correct;
        total += c.total;
    }
    out.macro = acc_sum / static_cast<double>(per_corpus.size());
    out.micro = total > 0 ? 100.0 * static_cast<double>(correct) / static_cast<double>(total) : 0.0;
    return out;
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

struct EvalReport {
    std::map<std::string, CorpusScore> per_corpus;  // corpus id -> score
    double macro = 0.0;
    double micro = 0.0;
    std::uint64_t repair_seed = 0;
    int repairs = 0;

    void recompute_aggregates() {
        std::vector<CorpusAccuracy> rows;
        rows.reserve(per_corpus.size());
        for (const auto& [_, s] : per_corpus) rows.push_back({s.correct, s.total, s.accuracy});
        AggregateResult agg = aggregate(rows);
        macro = agg.macro;
        micro = agg.micro;
    }
};

// Display rounding: two decimals, to match the convention of shared-task
// tables. Aggregation always runs on unrounded values.
inline std::string percent_str(double v) { return format_fixed(v, 2); }

inline nlohmann::ordered_json report_to_json(const EvalReport& report) {
    nlohmann::ordered_json j;
    j["repair_seed"] = report.repair_seed;
    j["repairs"] = report.repairs;
    nlohmann::ordered_json corpora = nlohmann::ordered_json::object();
    for (const auto& [id, s] : report.per_corpus) {
        nlohmann::ordered_json c;
        c["correct"] = s.correct;
        c["total"] = s.total;
        c["accuracy"] = s.accuracy;
        nlohmann::ordered_json confusion = nlohmann::ordered_json::array();
        for (const auto& [pair, count] : s.confusion)
            confusion.push_back({{"gold", pair.first}, {"pred", pair.second}, {"count", count}});
        c["confusion"] = confusion;
        corpora[id] = c;
    }
    j["per_corpus"] = corpora;
    j["macro"] = report.macro;
    j["micro"] = report.micro;
    return j;
}

inline EvalReport report_from_json(const nlohmann::json& j) {
    EvalReport report;
    report.repair_seed = j.value("repair_seed", std::uint64_t{0});
    report.repairs = j.value("repairs", 0);
    for (const auto& [id, c] : j.at("per_corpus").items()) {
        CorpusScore s;
        s.correct = c.at("correct").get<long>();
        s.total = c.at("total").get<long>();
        s.accuracy = c.at("accuracy").get<double>();
        if (c.contains("confusion"))
            for (const auto& cell : c.at("confusion"))
                s.confusion[{cell.at("gold").get<std::string>(), cell.at("pred").get<std::string>()}] =
                    cell.at("count").get<long>();
        report.per_corpus[id] = std::move(s);
    }
    if (j.contains("macro")) {
        report.macro = j.at("macro").get<double>();
        report.micro = j.at("micro").get<double>();
    } else if (!report.per_corpus.empty()) {
        report.recompute_aggregates();
    }
    return report;
}

inline EvalReport load_report(const fs::path& path) {
    try {
        return report_from_json(nlohmann::json::parse(read_file(path)));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

// ---------------------------------------------------------------------------
// Ablation
// ---------------------------------------------------------------------------

struct AblationRow {
    std::string corpus;
    double baseline_acc = 0.0;
    double ablated_acc = 0.0;
    double gain = 0.0;  // baseline - ablated
};

struct AblationReport {
    std::vector<AblationRow> rows;       // per corpus, sorted by corpus id
    AblationRow macro_row;               // aggregate of aggregates, not mean of gains
    AblationRow micro_row;
};

inline AblationReport ablation_report(const EvalReport& baseline, const EvalReport& ablated) {
    auto keys = [](const EvalReport& r) {
        std::vector<std::string> k;
        for (const auto& [id, _] : r.per_corpus) k.push_back(id);
        return k;
    };
    if (keys(baseline) != keys(ablated))
        throw CorpusSetMismatchError("baseline and ablated reports cover different corpora");

    AblationReport out;
    for (const auto& [id, base] : baseline.per_corpus) {
        const CorpusScore& abl = ablated.per_corpus.at(id);
        out.rows.push_back({id, base.accuracy, abl.accuracy, base.accuracy - abl.accuracy});
    }
    out.macro_row = {"macro_average", baseline.macro, ablated.macro, baseline.macro - ablated.macro};
    out.micro_row = {"micro_average", baseline.micro, ablated.micro, baseline.micro - ablated.micro};
    return out;
}

// Table layout: corpus, ablated absolute score, gain; aggregates at the end.
inline std::string ablation_tsv(const AblationReport& report) {
    std::string out = "corpus\tbaseline\tablated\tgain\n";
    auto row = [&](const AblationRow& r) {
        out += r.corpus;
        out += '\t';
        out += percent_str(r.baseline_acc);
        out += '\t';
        out += percent_str(r.ablated_acc);
        out += '\t';
        out += percent_str(r.gain);
        out += '\n';
    };
    for (const auto& r : report.rows) row(r);
    row(report.macro_row);
    row(report.micro_row);
    return out;
}

// ---------------------------------------------------------------------------
// Confusion matrices
// ---------------------------------------------------------------------------

struct ConfusionMatrix {
    std::vector<std::string> labels;          // inventory order
    std::vector<std::vector<long>> counts;    // rows gold, columns predicted
    std::vector<std::vector<double>> normalized;  // rows sum to 1, or 0 for absent gold labels
};

inline ConfusionMatrix confusion_to_matrix(const ConfusionCounts& confusion,
                                           const LabelInventory& inv) {
    ConfusionMatrix m;
    m.labels = inv.labels;
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < m.labels.size(); ++i) index[m.labels[i]] = i;

    const std::size_t n = m.labels.size();
    m.counts.assign(n, std::vector<long>(n, 0));
    for (const auto& [pair, count] : confusion) {
        auto g = index.find(pair.first);
        auto p = index.find(pair.second);
        if (g == index.end() || p == index.end())
            throw EvalFormatError("confusion label outside inventory: " + pair.first + "/" +
                                  pair.second);
        m.counts[g->second][p->second] += count;
    }

    m.normalized.assign(n, std::vector<double>(n, 0.0));
    for (std::size_t r = 0; r < n; ++r) {
        long row_sum = 0;
        for (long v : m.counts[r]) row_sum += v;
        if (row_sum == 0) continue;
        for (std::size_t c = 0; c < n; ++c)
            m.normalized[r][c] = static_cast<double>(m.counts[r][c]) / row_sum;
    }
    return m;
}

inline std::string confusion_tsv(const ConfusionMatrix& m, bool normalized) {
    std::string out = "gold\\pred";
    for (const auto& l : m.labels) {
        out += '\t';
        out += l;
    }
    out += '\n';
    for (std::size_t r = 0; r < m.labels.size(); ++r) {
        out += m.labels[r];
        for (std::size_t c = 0; c < m.labels.size(); ++c) {
            out += '\t';
            out += normalized ? format_double(m.normalized[r][c]) : std::to_string(m.counts[r][c]);
        }
        out += '\n';
    }
    return out;
}

}  // namespace discoforge
