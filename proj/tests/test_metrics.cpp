#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "oracles.hpp"
#include "rankroute/common.hpp"
#include "rankroute/metrics.hpp"

using namespace rr;

namespace {

RankedList make_list(std::vector<std::string> order) {
    RankedList list;
    list.instance_id = "t";
    list.order = std::move(order);
    return list;
}

RankingInstance tiny_instance(std::vector<std::string> candidate_ids, GradeMap qrels, int k) {
    RankingInstance inst;
    inst.id = "t";
    inst.task = Task::IR;
    inst.context = "q";
    for (auto& id : candidate_ids) inst.candidates.push_back({id, "text " + id});
    inst.qrels = std::move(qrels);
    inst.k = k;
    return inst;
}

}  // namespace

TEST_CASE("ndcg examples") {
    CHECK(ndcg_at_k(make_list({"a", "b", "c"}), {{"a", 1}}, 3).value == doctest::Approx(1.0));
    CHECK(ndcg_at_k(make_list({"b", "a", "c"}), {{"a", 1}}, 3).value ==
          doctest::Approx(0.6309).epsilon(1e-3));
    // graded case: hand DCG 6.3928 over ideal 9.3928
    const MetricResult graded = ndcg_at_k(make_list({"c", "b", "a"}), {{"a", 3}, {"b", 2}, {"c", 1}}, 3);
    CHECK(graded.value == doctest::Approx(0.6806).epsilon(1e-3));
    CHECK_FALSE(graded.flagged);
}

TEST_CASE("ndcg all-zero qrels is a flagged zero, not an exception") {
    const MetricResult r = ndcg_at_k(make_list({"a", "b"}), {{"a", 0}, {"b", 0}}, 2);
    CHECK(r.value == 0.0);
    CHECK(r.flagged);
    CHECK_THROWS_AS(ndcg_at_k(make_list({"a"}), {{"a", 1}}, 0), std::invalid_argument);
}

TEST_CASE("ndcg matches the exhaustive permutation oracle") {
    Rng rng(42);
    const std::vector<std::string> ids = {"a", "b", "c", "d", "e"};
    for (int trial = 0; trial < 60; ++trial) {
        const int n = 2 + static_cast<int>(rng.below(4));  // 2..5 items
        GradeMap qrels;
        bool any = false;
        for (int i = 0; i < n; ++i) {
            const int g = static_cast<int>(rng.below(4));
            qrels[ids[static_cast<std::size_t>(i)]] = g;
            any = any || g > 0;
        }
        if (!any) qrels[ids[0]] = 1;
        const int k = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(n)));

        std::vector<std::string> order(ids.begin(), ids.begin() + n);
        std::sort(order.begin(), order.end());
        do {
            const double expect = oracle::ndcg(order, qrels, k);
            CHECK(ndcg_at_k(make_list(order), qrels, k).value == doctest::Approx(expect).epsilon(1e-9));
        } while (std::next_permutation(order.begin(), order.end()));
    }
}

TEST_CASE("recall examples and monotonicity in k") {
    CHECK(recall_at_k(make_list({"a", "b", "c", "d"}), {{"a", 1}, {"c", 1}}, 2).value ==
          doctest::Approx(0.5));
    CHECK(recall_at_k(make_list({"a", "b"}), {{"a", 1}, {"b", 1}}, 2).value == doctest::Approx(1.0));
    CHECK(recall_at_k(make_list({"d", "c", "b", "a"}), {{"a", 1}}, 3).value == doctest::Approx(0.0));
    CHECK(recall_at_k(make_list({"a"}), GradeMap{}, 1).flagged);

    Rng rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<std::string> order = {"a", "b", "c", "d", "e"};
        rng.shuffle(order);
        GradeMap qrels;
        for (const auto& id : order)
            if (rng.coin()) qrels[id] = 1 + static_cast<int>(rng.below(3));
        if (qrels.empty()) qrels[order[0]] = 1;
        double prev = 0.0;
        for (int k = 1; k <= 5; ++k) {
            const double cur = recall_at_k(make_list(order), qrels, k).value;
            CHECK(cur >= prev - 1e-12);
            prev = cur;
        }
    }
}

TEST_CASE("top1 agreement incl. tie-at-max rule") {
    CHECK(top1_agreement(make_list({"a", "b"}), {{"a", 1}, {"b", 0}}) == 1);
    CHECK(top1_agreement(make_list({"b", "a"}), {{"a", 1}, {"b", 0}}) == 0);
    CHECK(top1_agreement(make_list({"b", "a", "c"}), {{"a", 2}, {"b", 2}, {"c", 0}}) == 1);
    CHECK_THROWS_AS(top1_agreement(make_list({}), {{"a", 1}}), std::invalid_argument);
}

TEST_CASE("pairwise accuracy examples") {
    CHECK(pairwise_accuracy({"a", "b", "c"}, {"a", "b", "c"}).value == doctest::Approx(1.0));
    CHECK(pairwise_accuracy({"a", "b", "c"}, {"a", "c", "b"}).value ==
          doctest::Approx(0.6667).epsilon(1e-3));
    CHECK(pairwise_accuracy({"c", "b", "a"}, {"a", "b", "c"}).value == doctest::Approx(0.0));

    const MetricResult degenerate = pairwise_accuracy({"a"}, {"a", "x"});
    CHECK(degenerate.value == doctest::Approx(1.0));
    CHECK(degenerate.flagged);
}

TEST_CASE("pairwise identity and reversal properties") {
    Rng rng(11);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<std::string> order;
        const int n = 2 + static_cast<int>(rng.below(6));
        for (int i = 0; i < n; ++i) order.push_back("i" + std::to_string(i));
        rng.shuffle(order);
        CHECK(pairwise_accuracy(order, order).value == doctest::Approx(1.0));
        std::vector<std::string> reversed(order.rbegin(), order.rend());
        CHECK(pairwise_accuracy(reversed, order).value == doctest::Approx(0.0));
    }
}

TEST_CASE("truth order: grade descending, candidate position breaks ties") {
    const RankingInstance inst =
        tiny_instance({"a", "b", "c", "d"}, {{"b", 2}, {"c", 2}, {"d", 1}}, 2);
    const std::vector<std::string> truth = truth_order(inst);
    CHECK(truth == std::vector<std::string>{"b", "c", "d", "a"});
}

TEST_CASE("utility metric parsing and evaluation") {
    const UtilityMetric m = UtilityMetric::parse("ndcg@10");
    CHECK(m.name() == "ndcg@10");
    CHECK(UtilityMetric::parse("recall@5").k == 5);
    CHECK(UtilityMetric::parse("top1").name() == "top1");
    CHECK_THROWS_AS(UtilityMetric::parse("mrr"), std::invalid_argument);

    const RankingInstance inst = tiny_instance({"a", "b"}, {{"a", 1}}, 2);
    CHECK(m.evaluate(inst, make_list({"a", "b"})) == doctest::Approx(1.0));
    CHECK(m.evaluate(inst, make_list({})) == 0.0);  // parse failures score zero
}
