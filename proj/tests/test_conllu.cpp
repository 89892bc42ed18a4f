#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "uvprobe/conllu.hpp"
#include "uvprobe/rng.hpp"

using namespace uvprobe;
using namespace uvprobe::conllu;

namespace {

const char* kSample =
    "# sent_id = s1\n"
    "# text = du kitap\n"
    "1-2\tdu\t_\t_\t_\t_\t_\t_\t_\t_\n"
    "1\tde\tde\tADP\t_\t_\t3\tcase\t_\t_\n"
    "2\tle\tle\tDET\t_\tGender=Masc|Number=Sing\t3\tdet\t_\t_\n"
    "3\tkitap\tkitap\tNOUN\t_\tCase=Nom|Gender=Fem\t0\troot\t_\tSpaceAfter=No\n"
    "3.1\tx\t_\tX\t_\t_\t_\t_\t2:dep\t_\n"
    "\n"
    "# sent_id = s2\n"
    "1\tkitap\tkitap\tNOUN\t_\tCase=Acc,Nom\t2\tobj\t_\t_\n"
    "2\tokudum\toku\tVERB\t_\t_\t0\troot\t_\t_\n"
    "\n";

}  // namespace

TEST(ParseConllu, TenColumnLine) {
    auto c = parse_conllu("1\tkitap\tkitap\tNOUN\t_\tCase=Nom\t2\tobj\t_\t_\n", "tr");
    ASSERT_EQ(c.sentences.size(), 1u);
    const auto& t = c.sentences[0].tokens.at(0);
    EXPECT_EQ(t.id, 1u);
    EXPECT_EQ(t.form, "kitap");
    EXPECT_EQ(t.upos, Upos::NOUN);
    ASSERT_EQ(t.feats.size(), 1u);
    EXPECT_EQ(t.feats[0], std::make_pair(std::string("Case"), std::string("Nom")));
}

TEST(ParseConllu, SkipsRangesAndEmptyNodes) {
    auto c = parse_conllu(kSample, "fr");
    ASSERT_EQ(c.sentences.size(), 2u);
    EXPECT_EQ(c.sentences[0].tokens.size(), 3u);
    EXPECT_EQ(c.sentences[0].tokens[0].id, 1u);
    EXPECT_EQ(c.sentences[0].tokens[1].id, 2u);
    EXPECT_EQ(c.skipped_lines, 2u);
    EXPECT_EQ(c.token_count, 5u);
    EXPECT_EQ(c.sentences[0].text, "du kitap");
    EXPECT_EQ(c.sentences[1].sent_id, "s2");
}

TEST(ParseConllu, AcceptsCrlf) {
    auto c = parse_conllu("# sent_id = a\r\n1\tx\tx\tNOUN\t_\t_\t0\troot\t_\t_\r\n\r\n", "en");
    ASSERT_EQ(c.sentences.size(), 1u);
    EXPECT_EQ(c.sentences[0].sent_id, "a");
    EXPECT_EQ(c.sentences[0].tokens[0].misc, "_");
}

TEST(ParseConllu, ColumnCountErrorCarriesLine) {
    try {
        parse_conllu("# sent_id = a\n1\tx\tx\tNOUN\t_\t_\t0\troot\t_\n", "en");
        FAIL();
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line, 2u);
    }
}

TEST(ParseConllu, UnknownUposAndDuplicateSentId) {
    EXPECT_THROW(parse_conllu("1\tx\tx\tNOUNY\t_\t_\t0\troot\t_\t_\n", "en"), ParseError);
    EXPECT_THROW(parse_conllu("# sent_id = a\n1\tx\tx\tNOUN\t_\t_\t0\troot\t_\t_\n\n"
                              "# sent_id = a\n1\ty\ty\tNOUN\t_\t_\t0\troot\t_\t_\n",
                              "en"),
                 ParseError);
    EXPECT_THROW(parse_conllu("1\tx\tx\tNOUN\t_\t_\t0\troot\t_\t_\n", "xx"), ParseError);
}

TEST(ParseConllu, NonIncreasingIdsRejected) {
    EXPECT_THROW(parse_conllu("2\tx\tx\tNOUN\t_\t_\t0\troot\t_\t_\n1\ty\ty\tNOUN\t_\t_\t0\troot\t_\t_\n", "en"),
                 ParseError);
}

TEST(ParseConllu, RegistryIsExtensible) {
    auto reg = LanguageRegistry::defaults();
    reg.add({"fa", "Persian", "-", "-"});
    EXPECT_NO_THROW(parse_conllu("1\tx\tx\tNOUN\t_\t_\t0\troot\t_\t_\n", "fa", reg));
}

TEST(ParseConllu, SerializeParseFixedPoint) {
    auto a = parse_conllu(kSample, "fr");
    auto b = parse_conllu(serialize_conllu(a), "fr");
    ASSERT_EQ(a.sentences.size(), b.sentences.size());
    for (std::size_t s = 0; s < a.sentences.size(); ++s) {
        ASSERT_EQ(a.sentences[s].tokens.size(), b.sentences[s].tokens.size());
        EXPECT_EQ(a.sentences[s].sent_id, b.sentences[s].sent_id);
        EXPECT_EQ(a.sentences[s].text, b.sentences[s].text);
        for (std::size_t i = 0; i < a.sentences[s].tokens.size(); ++i) {
            const auto& x = a.sentences[s].tokens[i];
            const auto& y = b.sentences[s].tokens[i];
            EXPECT_EQ(x.id, y.id);
            EXPECT_EQ(x.form, y.form);
            EXPECT_EQ(x.upos, y.upos);
            EXPECT_EQ(x.feats, y.feats);
            EXPECT_EQ(x.misc, y.misc);
        }
    }
    EXPECT_EQ(serialize_conllu(a), serialize_conllu(b));
}

TEST(Feats, RoundTripsByteIdentically) {
    for (const char* s : {"Case=Nom|Gender=Fem", "_", "Number=Plur|Case=Acc,Nom", "Case=Nom|Acc", "Typo"}) {
        EXPECT_EQ(serialize_feats(parse_feats(s)), s);
    }
}

TEST(ExtractTaskLabels, DirectLookupAndPolicies) {
    auto c = parse_conllu(kSample, "fr");
    auto gender = extract_task_labels(c, Task::Gender, MissingFeaturePolicy::NoneClass);
    ASSERT_EQ(gender.size(), 5u);
    EXPECT_EQ(gender.class_name(gender.labels[1]), "Masc");
    EXPECT_EQ(gender.class_name(gender.labels[0]), "None");
    EXPECT_DOUBLE_EQ(gender.coverage, 1.0);

    auto dropped = extract_task_labels(c, Task::Gender, MissingFeaturePolicy::DropMissing);
    EXPECT_EQ(dropped.size(), 2u);
    EXPECT_DOUBLE_EQ(dropped.coverage, 0.4);
    EXPECT_EQ(dropped.class_names, (std::vector<std::string>{"Fem", "Masc"}));

    auto cas = extract_task_labels(c, Task::Case, MissingFeaturePolicy::DropMissing);
    ASSERT_EQ(cas.size(), 2u);
    // multi-valued features take the first value
    EXPECT_EQ(cas.class_name(cas.labels[1]), "Acc");

    auto lang = extract_task_labels(c, Task::LangID);
    EXPECT_EQ(lang.class_names, std::vector<std::string>{"fr"});
    EXPECT_EQ(lang.size(), c.token_count);

    auto upos = extract_task_labels(c, Task::UPOS);
    EXPECT_TRUE(std::is_sorted(upos.class_names.begin(), upos.class_names.end()));
    for (const auto& l : upos.labels) EXPECT_LT(l.class_id, upos.class_names.size());
}

TEST(ExtractTaskLabels, EmptyNoneClassTokenGetsNone) {
    auto c = parse_conllu("1\tx\tx\tNOUN\t_\t_\t0\troot\t_\t_\n", "en");
    auto cas = extract_task_labels(c, Task::Case, MissingFeaturePolicy::NoneClass);
    EXPECT_EQ(cas.class_name(cas.labels[0]), "None");
}

TEST(ExtractTaskLabels, Errors) {
    auto c = parse_conllu("1\tx\tx\tNOUN\t_\t_\t0\troot\t_\t_\n", "ja");
    EXPECT_THROW(extract_task_labels(c, Task::Gender, MissingFeaturePolicy::DropMissing), EmptyDatasetError);
    auto bad = parse_conllu("1\tx\tx\tNOUN\t_\tCase=Nom|Acc\t0\troot\t_\t_\n", "de");
    EXPECT_THROW(extract_task_labels(bad, Task::Case), ParseError);
    EXPECT_NO_THROW(extract_task_labels(bad, Task::Gender));
}

TEST(ExtractTaskLabels, CoverageBoundsOnRandomCorpora) {
    Rng rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        std::string doc;
        const auto n_sent = 1 + rng.below(5);
        for (std::uint64_t s = 0; s < n_sent; ++s) {
            doc += "# sent_id = " + std::to_string(s) + "\n";
            const auto n_tok = 1 + rng.below(6);
            for (std::uint64_t t = 1; t <= n_tok; ++t) {
                std::string feats = rng.below(2) ? "Case=Nom" : "_";
                doc += std::to_string(t) + "\tw\tw\tNOUN\t_\t" + feats + "\t0\troot\t_\t_\n";
            }
            doc += "\n";
        }
        auto c = parse_conllu(doc, "tr");
        auto none = extract_task_labels(c, Task::Case, MissingFeaturePolicy::NoneClass);
        EXPECT_DOUBLE_EQ(none.coverage, 1.0);
        try {
            auto drop = extract_task_labels(c, Task::Case, MissingFeaturePolicy::DropMissing);
            EXPECT_LE(drop.coverage, 1.0);
            EXPECT_GT(drop.coverage, 0.0);
        } catch (const EmptyDatasetError&) {
        }
    }
}

TEST(PluginEntropy, ClosedForms) {
    std::vector<std::size_t> half{5, 5};
    EXPECT_NEAR(plugin_entropy_from_counts(half), std::log(2.0), 1e-12);
    std::vector<std::size_t> one{7};
    EXPECT_EQ(plugin_entropy_from_counts(one), 0.0);
    std::vector<std::size_t> q{2, 1, 1};
    EXPECT_NEAR(plugin_entropy_from_counts(q), 1.039720770839918, 1e-12);
}

TEST(PluginEntropy, PermutationInvariantAndMaximalAtUniform) {
    Rng rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t C = 2 + rng.below(8);
        std::vector<std::size_t> counts(C);
        for (auto& c : counts) c = rng.below(50);
        if (std::accumulate(counts.begin(), counts.end(), std::size_t{0}) == 0) counts[0] = 1;
        const double h = plugin_entropy_from_counts(counts);
        auto shuffled = counts;
        rng.shuffle(std::span<std::size_t>(shuffled));
        EXPECT_EQ(h, plugin_entropy_from_counts(shuffled));
        EXPECT_LE(h, std::log(static_cast<double>(C)) + 1e-12);
        std::vector<std::size_t> uniform(C, 1 + rng.below(10));
        EXPECT_NEAR(plugin_entropy_from_counts(uniform), std::log(static_cast<double>(C)), 1e-12);
    }
}

TEST(PluginEntropy, FromLabels) {
    auto c = parse_conllu(kSample, "fr");
    auto lang = extract_task_labels(c, Task::LangID);
    EXPECT_EQ(plugin_entropy(lang), 0.0);
}
