#include <catch2/catch.hpp>

#include "discoforge/corpus.hpp"
#include "discoforge/features.hpp"

#include "test_util.hpp"

using namespace discoforge;

namespace {

CorpusId demo_id() { return CorpusId::parse("eng.erst.demo"); }

LabelInventory demo_inventory() {
    return LabelInventory::load(testutil::configs_dir() / "labels_disrpt2025.txt");
}

struct Fixture {
    RelsFile rels;
    std::vector<DocumentModel> docs;

    Fixture() {
        rels = parse_rels(testutil::data_dir() / "eng.erst.demo_train.rels", demo_id(),
                          demo_inventory());
        docs = parse_conllu(testutil::data_dir() / "eng.erst.demo_train.conllu");
        for (auto& d : docs) d.genre = infer_genre(d.doc_id, demo_id(), {});
    }

    const DocumentModel& doc(const std::string& id) const {
        for (const auto& d : docs)
            if (d.doc_id == id) return d;
        throw std::runtime_error("no doc " + id);
    }
};

// A document of `sentences` sentences with `tokens_each` tokens per sentence.
DocumentModel uniform_doc(const std::string& id, int sentences, int tokens_each) {
    DocumentModel doc;
    doc.doc_id = id;
    for (int s = 0; s < sentences; ++s) {
        Sentence sent;
        for (int t = 0; t < tokens_each; ++t)
            sent.tokens.push_back("w" + std::to_string(s) + "_" + std::to_string(t));
        doc.token_count += tokens_each;
        doc.sentences.push_back(std::move(sent));
    }
    return doc;
}

RelationInstance simple_instance(const std::string& doc_id, TokenSpanSet u1, TokenSpanSet u2) {
    RelationInstance inst;
    inst.doc_id = doc_id;
    inst.unit1_spans = std::move(u1);
    inst.unit2_spans = std::move(u2);
    inst.unit1_text = "u1 text";
    inst.unit2_text = "u2 text";
    inst.label = "causal";
    return inst;
}

}  // namespace

TEST_CASE("length ratio and discontinuity") {
    DocumentModel doc = uniform_doc("d", 2, 10);
    RelationInstance inst =
        simple_instance("d", TokenSpanSet::parse("1-3"), TokenSpanSet::parse("5-14"));
    FeatureVector fv = compute_features(inst, doc, demo_id(), nullptr, {});
    CHECK(fv.length_ratio == Approx(0.3));

    RelationInstance disc =
        simple_instance("d", TokenSpanSet::parse("5-7,9"), TokenSpanSet::parse("11-14"));
    FeatureVector fv2 = compute_features(disc, doc, demo_id(), nullptr, {});
    CHECK(fv2.discontinuous_u1);
    CHECK_FALSE(fv2.discontinuous_u2);

    RelationInstance cont =
        simple_instance("d", TokenSpanSet::parse("5-9"), TokenSpanSet::parse("11-14"));
    CHECK_FALSE(compute_features(cont, doc, demo_id(), nullptr, {}).discontinuous_u1);
}

TEST_CASE("position is the zero-based offset of unit1 over document length") {
    DocumentModel doc = uniform_doc("d", 10, 10);  // 100 tokens
    RelationInstance inst =
        simple_instance("d", TokenSpanSet::parse("41-45"), TokenSpanSet::parse("51-60"));
    FeatureVector fv = compute_features(inst, doc, demo_id(), nullptr, {});
    CHECK(fv.position == Approx(0.4));
    CHECK(fv.doc_length == 100);

    // Spans beyond the (synthesized, shorter) document clamp into [0,1].
    RelationInstance beyond =
        simple_instance("d", TokenSpanSet::parse("500-501"), TokenSpanSet::parse("502-503"));
    CHECK(compute_features(beyond, doc, demo_id(), nullptr, {}).position <= 1.0);
}

TEST_CASE("position is monotone in unit1 start within a document") {
    DocumentModel doc = uniform_doc("d", 10, 10);
    double last = -1.0;
    for (int start : {1, 5, 17, 42, 80, 99}) {
        RelationInstance inst = simple_instance("d", TokenSpanSet{{{start, start + 1}}},
                                                TokenSpanSet::parse("100"));
        double pos = compute_features(inst, doc, demo_id(), nullptr, {}).position;
        CHECK(pos > last);
        last = pos;
    }
}

TEST_CASE("lexical overlap counts shared non-stoplist word types") {
    DocumentModel doc = uniform_doc("d", 1, 20);
    RelationInstance inst =
        simple_instance("d", TokenSpanSet::parse("1-3"), TokenSpanSet::parse("5-8"));
    inst.unit1_text = "the cat sat";
    inst.unit2_text = "the dog sat down";
    FeatureVector fv = compute_features(inst, doc, demo_id(), nullptr, {"the"});
    CHECK(fv.lexical_overlap == 1);  // "sat"

    FeatureVector no_stop = compute_features(inst, doc, demo_id(), nullptr, {});
    CHECK(no_stop.lexical_overlap == 2);  // "the", "sat"

    inst.unit2_text = "SAT the CAT";
    CHECK(compute_features(inst, doc, demo_id(), nullptr, {"the"}).lexical_overlap == 2);
}

TEST_CASE("same speaker from the fixture dialogue") {
    Fixture fx;
    const DocumentModel& reddit = fx.doc("GUM_reddit_macroeconomics");

    FeatureVector across = compute_features(fx.rels.instances[3], reddit, demo_id(), nullptr, {});
    CHECK(across.same_speaker == TriState::False);  // alice vs bob

    FeatureVector same = compute_features(fx.rels.instances[4], reddit, demo_id(), nullptr, {});
    CHECK(same.same_speaker == TriState::True);  // bob vs bob

    const DocumentModel& art = fx.doc("GUM_academic_art");
    FeatureVector mono = compute_features(fx.rels.instances[0], art, demo_id(), nullptr, {});
    CHECK(mono.same_speaker == TriState::Unknown);
}

TEST_CASE("is_sentence via sentence spans and via text") {
    Fixture fx;
    const DocumentModel& art = fx.doc("GUM_academic_art");
    FeatureVector fv = compute_features(fx.rels.instances[0], art, demo_id(), nullptr, {});
    CHECK(fv.is_sentence_u1);  // unit span 1-6 equals sentence span 1-6
    CHECK(fv.is_sentence_u2);

    FeatureVector disc = compute_features(fx.rels.instances[2], art, demo_id(), nullptr, {});
    CHECK_FALSE(disc.is_sentence_u1);  // 23-24,26 is not the whole sentence 23-27

    // Without sentence spans, text comparison decides.
    RelationInstance inst =
        simple_instance("GUM_academic_art", TokenSpanSet::parse("28-31"), TokenSpanSet::parse("18-22"));
    inst.unit1_text = "Future work follows .";
    inst.sent1_text = "Future work follows .";
    inst.unit2_text = "results were";
    inst.sent2_text = "The results were clear .";
    FeatureVector by_text = compute_features(inst, art, demo_id(), nullptr, {});
    CHECK(by_text.is_sentence_u1);
    CHECK_FALSE(by_text.is_sentence_u2);
}

TEST_CASE("genre lands in the feature vector") {
    Fixture fx;
    FeatureVector fv = compute_features(fx.rels.instances[0], fx.doc("GUM_academic_art"), demo_id(),
                                        nullptr, {});
    CHECK(fv.genre == "academic");
}

TEST_CASE("children and distance from the unit inventory") {
    Fixture fx;
    auto grouped = group_by_document(fx.rels.instances);
    UnitInventory inv = UnitInventory::build(grouped.at("GUM_academic_art"));
    // Units of the doc: 1-6, 7-17, 18-22, 23-24,26, 28-31 -> five distinct.
    CHECK(inv.units.size() == 5);

    const DocumentModel& art = fx.doc("GUM_academic_art");
    // Row 0: 1-6 -> 7-17 forward, so 7-17 is its head. Row 1: 7-17 <- 18-22
    // backward, so 7-17 is the head again.
    FeatureVector fv0 = compute_features(fx.rels.instances[0], art, demo_id(), &inv, {});
    REQUIRE(fv0.children_u1.has_value());
    CHECK(*fv0.children_u1 == 0);
    CHECK(*fv0.children_u2 == 2);

    // Adjacent units in the inventory: distance 0.
    CHECK(fv0.distance == 0);

    // 7-17 and 18-22 are adjacent; 1-6 to 18-22 skips one unit.
    RelationInstance skip =
        simple_instance("GUM_academic_art", TokenSpanSet::parse("1-6"), TokenSpanSet::parse("18-22"));
    CHECK(compute_features(skip, art, demo_id(), &inv, {}).distance == 1);

    // Swapping the arguments leaves distance unchanged.
    RelationInstance swapped =
        simple_instance("GUM_academic_art", TokenSpanSet::parse("18-22"), TokenSpanSet::parse("1-6"));
    CHECK(compute_features(swapped, art, demo_id(), &inv, {}).distance == 1);

    // Without an inventory the children are absent.
    FeatureVector bare = compute_features(fx.rels.instances[0], art, demo_id(), nullptr, {});
    CHECK_FALSE(bare.children_u1.has_value());
}

TEST_CASE("adjacent inventory units always have distance zero") {
    Fixture fx;
    auto grouped = group_by_document(fx.rels.instances);
    const DocumentModel& art = fx.doc("GUM_academic_art");
    UnitInventory inv = UnitInventory::build(grouped.at("GUM_academic_art"));
    REQUIRE(inv.units.size() >= 2);
    for (std::size_t i = 0; i + 1 < inv.units.size(); ++i) {
        RelationInstance inst = simple_instance("GUM_academic_art", inv.units[i], inv.units[i + 1]);
        CHECK(compute_features(inst, art, demo_id(), &inv, {}).distance == 0);
        RelationInstance swapped =
            simple_instance("GUM_academic_art", inv.units[i + 1], inv.units[i]);
        CHECK(compute_features(swapped, art, demo_id(), &inv, {}).distance == 0);
    }
}

TEST_CASE("distance falls back to sentence boundaries without an inventory") {
    Fixture fx;
    const DocumentModel& art = fx.doc("GUM_academic_art");

    // Same sentence: no boundary between.
    RelationInstance same_sent =
        simple_instance("GUM_academic_art", TokenSpanSet::parse("7-10"), TokenSpanSet::parse("12-17"));
    CHECK(compute_features(same_sent, art, demo_id(), nullptr, {}).distance == 0);

    // S1 to S2: one boundary between token 6 and 7.
    RelationInstance adjacent =
        simple_instance("GUM_academic_art", TokenSpanSet::parse("1-6"), TokenSpanSet::parse("7-17"));
    CHECK(compute_features(adjacent, art, demo_id(), nullptr, {}).distance == 1);

    // S1 to S3: boundaries after S1 and S2.
    RelationInstance far =
        simple_instance("GUM_academic_art", TokenSpanSet::parse("1-6"), TokenSpanSet::parse("18-22"));
    CHECK(compute_features(far, art, demo_id(), nullptr, {}).distance == 2);
}

TEST_CASE("compute_features rejects mismatched documents") {
    DocumentModel doc = uniform_doc("other", 1, 5);
    RelationInstance inst = simple_instance("d", TokenSpanSet::parse("1"), TokenSpanSet::parse("2"));
    CHECK_THROWS_AS(compute_features(inst, doc, demo_id(), nullptr, {}), DocMismatchError);
}

TEST_CASE("compute_features is pure") {
    Fixture fx;
    const DocumentModel& art = fx.doc("GUM_academic_art");
    auto grouped = group_by_document(fx.rels.instances);
    UnitInventory inv = UnitInventory::build(grouped.at("GUM_academic_art"));
    for (int i = 0; i < 3; ++i) {
        FeatureVector a = compute_features(fx.rels.instances[0], art, demo_id(), &inv, {"the"});
        FeatureVector b = compute_features(fx.rels.instances[0], art, demo_id(), &inv, {"the"});
        CHECK(feature_tsv_row(fx.rels.instances[0], a) == feature_tsv_row(fx.rels.instances[0], b));
    }
}

TEST_CASE("mark_direction wraps and round-trips") {
    CHECK(mark_direction("Aesthetic Appreciation and Spanish Art:", Direction::Forward) ==
          "} Aesthetic Appreciation and Spanish Art: >");
    CHECK(mark_direction("X", Direction::Backward) == "{ X <");
    CHECK_THROWS_AS(mark_direction("", Direction::Forward), Error);

    for (auto dir : {Direction::Forward, Direction::Backward}) {
        std::string arg = "some argument text , with punctuation";
        std::string marked = mark_direction(arg, dir);
        // Strip the leading "X " and trailing " Y" marker tokens.
        CHECK(marked.substr(2, marked.size() - 4) == arg);
    }
}

TEST_CASE("extract_context follows the sentence window rule") {
    // Synthetic five-sentence document, ten tokens each.
    DocumentModel doc = uniform_doc("d", 5, 10);

    SECTION("args in S2 and S3 give (S1, S2+S3, S4)") {
        RelationInstance inst =
            simple_instance("d", TokenSpanSet::parse("11-14"), TokenSpanSet::parse("25-28"));
        ContextWindow ctx = extract_context(inst, doc);
        CHECK(ctx.pre == doc.sentence_text(0));
        CHECK(ctx.focal == doc.sentence_text(1) + " " + doc.sentence_text(2));
        CHECK(ctx.post == doc.sentence_text(3));
    }

    SECTION("both args in S1 of a two-sentence document") {
        DocumentModel two = uniform_doc("d", 2, 10);
        RelationInstance inst =
            simple_instance("d", TokenSpanSet::parse("1-3"), TokenSpanSet::parse("5-8"));
        ContextWindow ctx = extract_context(inst, two);
        CHECK(ctx.pre.empty());
        CHECK(ctx.focal == two.sentence_text(0));
        CHECK(ctx.post == two.sentence_text(1));
    }

    SECTION("single-sentence document has empty pre and post") {
        DocumentModel one = uniform_doc("d", 1, 10);
        RelationInstance inst =
            simple_instance("d", TokenSpanSet::parse("1-3"), TokenSpanSet::parse("5-8"));
        ContextWindow ctx = extract_context(inst, one);
        CHECK(ctx.pre.empty());
        CHECK(ctx.focal == one.sentence_text(0));
        CHECK(ctx.post.empty());
    }

    SECTION("pre, focal and post never overlap and appear in order") {
        for (int s1 = 0; s1 < 5; ++s1) {
            for (int s2 = s1; s2 < 5; ++s2) {
                RelationInstance inst = simple_instance(
                    "d", TokenSpanSet{{{s1 * 10 + 1, s1 * 10 + 3}}},
                    TokenSpanSet{{{s2 * 10 + 5, s2 * 10 + 8}}});
                ContextWindow ctx = extract_context(inst, doc);
                std::string all = ctx.pre + "|" + ctx.focal + "|" + ctx.post;
                // Each sentence text occurs at most once across the window.
                for (int s = 0; s < 5; ++s) {
                    std::string needle = doc.sentence_text(s);
                    std::size_t first = all.find(needle);
                    if (first != std::string::npos)
                        CHECK(all.find(needle, first + 1) == std::string::npos);
                }
            }
        }
    }
}

TEST_CASE("extract_context falls back when sentences cannot be located") {
    DocumentModel doc = uniform_doc("d", 2, 3);  // six tokens, none matching
    RelationInstance inst =
        simple_instance("d", TokenSpanSet::parse("50-52"), TokenSpanSet::parse("60-62"));
    inst.sent1_text = "First argument sentence .";
    inst.sent2_text = "Second argument sentence .";
    Diagnostics diag;
    ContextWindow ctx = extract_context(inst, doc, &diag);
    CHECK(ctx.pre.empty());
    CHECK(ctx.post.empty());
    CHECK(ctx.focal == "First argument sentence . Second argument sentence .");
    CHECK(diag.warnings.size() == 1);

    // Same sentence text on both sides is not duplicated.
    inst.sent2_text = inst.sent1_text;
    ContextWindow dedup = extract_context(inst, doc);
    CHECK(dedup.focal == "First argument sentence .");
}

TEST_CASE("extract_context locates sentences by text in synthesized documents") {
    RelsFile file = parse_rels(testutil::data_dir() / "deu.rst.demo_train.rels",
                               CorpusId::parse("deu.rst.demo"),
                               LabelInventory::from_labels({"elaboration", "causal", "conjunction"}));
    auto grouped = group_by_document(file.instances);
    DocumentModel doc = synthesize_document("pcc_d1", grouped.at("pcc_d1"));

    // Spans outside the synthesized numbering force the text-match path.
    RelationInstance inst =
        simple_instance("pcc_d1", TokenSpanSet::parse("100-103"), TokenSpanSet::parse("110-113"));
    inst.sent1_text = "Die Katze wacht .";
    inst.sent2_text = "Es regnet draußen .";
    ContextWindow ctx = extract_context(inst, doc);
    CHECK(ctx.pre == "Der Hund schläft .");
    CHECK(ctx.focal == "Die Katze wacht . Es regnet draußen .");
    CHECK(ctx.post == "Wir bleiben hier .");
}

TEST_CASE("feature tsv rows are stable") {
    Fixture fx;
    const DocumentModel& art = fx.doc("GUM_academic_art");
    FeatureVector fv = compute_features(fx.rels.instances[0], art, demo_id(), nullptr, {});
    std::string row = feature_tsv_row(fx.rels.instances[0], fv);
    CHECK(split(row, '\t').size() == feature_tsv_header().size());
    CHECK(row == feature_tsv_row(fx.rels.instances[0], fv));
}
