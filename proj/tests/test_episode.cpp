#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>

#include "fedshot/episode.hpp"
#include "fedshot/errors.hpp"
#include "fedshot/rng.hpp"

using namespace fedshot;

namespace {

// one patient's embedded segments with a chosen class mix
std::vector<Embedding> patient_pool(std::uint32_t pid,
                                    const std::map<int, int>& per_class) {
    std::vector<Embedding> out;
    std::uint64_t idx = 0;
    for (const auto& [label, count] : per_class) {
        for (int i = 0; i < count; ++i) {
            Embedding e;
            e.segment_id = (static_cast<std::uint64_t>(pid) << 32) | idx++;
            e.patient_id = pid;
            e.label = label;
            e.values = {static_cast<double>(idx)};
            out.push_back(std::move(e));
        }
    }
    return out;
}

std::vector<PatientTypes> typed_pool(const std::map<std::uint32_t, std::set<int>>& types) {
    std::vector<PatientTypes> pool;
    for (const auto& [pid, set] : types) {
        pool.push_back({pid, set});
    }
    return pool;
}

} // namespace

TEST_CASE("build_task invariants hold across 1000 seeds") {
    const auto segs = patient_pool(17, {{1, 12}, {3, 9}, {5, 19}});  // 40 segments
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        const FewShotTask task = build_task(segs, seed);
        CHECK(task.patient_id == 17);
        REQUIRE(task.support.size() == kSupportSize);
        REQUIRE(task.validation.size() == kValidationSize);
        REQUIRE(task.query.size() == kQuerySize);

        std::size_t seizure = 0;
        std::size_t background = 0;
        for (const auto& e : task.support) {
            (is_seizure_class(e.label) ? seizure : background) += 1;
        }
        CHECK(seizure == kSupportSeizure);
        CHECK(background == 1);

        std::set<std::uint64_t> ids;
        for (const auto* part : {&task.support, &task.validation, &task.query}) {
            for (const auto& e : *part) {
                CHECK(e.patient_id == 17);
                CHECK(ids.insert(e.segment_id).second);  // no collisions anywhere
            }
        }
        CHECK(ids.size() == 35);
    }
}

TEST_CASE("build_task is bitwise deterministic in the seed") {
    const auto segs = patient_pool(4, {{2, 10}, {5, 26}});
    const FewShotTask a = build_task(segs, 777);
    const FewShotTask b = build_task(segs, 777);
    const FewShotTask c = build_task(segs, 778);
    const auto ids_of = [](const std::vector<Embedding>& part) {
        std::vector<std::uint64_t> ids;
        for (const auto& e : part) {
            ids.push_back(e.segment_id);
        }
        return ids;
    };
    CHECK(ids_of(a.support) == ids_of(b.support));
    CHECK(ids_of(a.validation) == ids_of(b.validation));
    CHECK(ids_of(a.query) == ids_of(b.query));
    CHECK(ids_of(a.support) != ids_of(c.support));
}

TEST_CASE("build_task minimal feasible case forces the support composition") {
    // exactly 4 seizure + 31 background: all four seizure segments must
    // appear in support, plus one background shot
    const auto segs = patient_pool(2, {{1, 4}, {5, 31}});
    const FewShotTask task = build_task(segs, 123);
    std::multiset<int> support_labels;
    for (const auto& e : task.support) {
        support_labels.insert(e.label);
    }
    CHECK(support_labels == std::multiset<int>{1, 1, 1, 1, 5});
}

TEST_CASE("build_task rejects infeasible patients") {
    CHECK_THROWS_AS(build_task(patient_pool(1, {{1, 3}, {5, 40}}), 0),
                    InsufficientSeizureSegments);
    CHECK_THROWS_AS(build_task(patient_pool(1, {{1, 30}, {2, 10}}), 0),
                    InsufficientSegments);  // no background
    CHECK_THROWS_AS(build_task(patient_pool(1, {{1, 10}, {5, 10}}), 0),
                    InsufficientSegments);  // only 20 < 35
    CHECK_THROWS_AS(build_task({}, 0), InsufficientSegments);

    auto mixed = patient_pool(1, {{1, 20}, {5, 20}});
    mixed.front().patient_id = 2;
    CHECK_THROWS_AS(build_task(mixed, 0), InvalidSpec);
}

TEST_CASE("task validate catches duplicated segments") {
    const auto segs = patient_pool(6, {{1, 8}, {5, 30}});
    FewShotTask task = build_task(segs, 5);
    task.validate();
    task.query[0] = task.support[0];
    CHECK_THROWS_AS(task.validate(), InvalidSpec);
}

TEST_CASE("partition_e1 balances 200 patients over 4 clients") {
    std::vector<std::uint32_t> patients(200);
    for (std::uint32_t i = 0; i < 200; ++i) {
        patients[i] = i + 1;
    }
    const ClientAssignment a = partition_e1(patients, 4, 99);
    REQUIRE(a.patients.size() == 4);
    std::set<std::uint32_t> seen;
    for (const auto& [client, list] : a.patients) {
        CHECK(list.size() == 50);
        for (std::uint32_t p : list) {
            CHECK(seen.insert(p).second);
        }
    }
    CHECK(seen.size() == 200);
}

TEST_CASE("partition_e1 splits 5 patients over 4 clients as 2+1+1+1") {
    const ClientAssignment a = partition_e1({1, 2, 3, 4, 5}, 4, 1);
    std::multiset<std::size_t> sizes;
    for (const auto& [client, list] : a.patients) {
        sizes.insert(list.size());
    }
    CHECK(sizes == std::multiset<std::size_t>{1, 1, 1, 2});
}

TEST_CASE("partition_e1 is deterministic and rejects thin pools") {
    const ClientAssignment a = partition_e1({1, 2, 3, 4, 5, 6, 7}, 3, 42);
    const ClientAssignment b = partition_e1({1, 2, 3, 4, 5, 6, 7}, 3, 42);
    CHECK(a.patients == b.patients);
    CHECK_THROWS_AS(partition_e1({1, 2}, 3, 0), TooFewPatients);
    CHECK_THROWS_AS(partition_e1({1, 2, 3}, 0, 0), NoClients);
}

TEST_CASE("validate_disjoint flags a patient assigned twice") {
    ClientAssignment a;
    a.patients[1] = {1, 2};
    a.patients[2] = {3, 2};
    CHECK_THROWS_AS(a.validate_disjoint(), InvalidSpec);
    a.patients[2] = {3, 4};
    a.validate_disjoint();
}

TEST_CASE("partition_e2 honors the default type map on a cycling pool") {
    // 32 patients: pid p carries seizure type 1 + (p-1) % 4
    std::map<std::uint32_t, std::set<int>> types;
    for (std::uint32_t p = 1; p <= 32; ++p) {
        types[p] = {1 + static_cast<int>((p - 1) % 4)};
    }
    const ClientAssignment a =
        partition_e2(typed_pool(types), 4, 2024, {5, 8}, default_client_types(),
                     {7, 7, 6, 8});
    REQUIRE(a.patients.size() == 4);
    const ClientTypeMap profile = default_client_types();
    std::set<std::uint32_t> seen;
    for (const auto& [client, list] : a.patients) {
        // exactly on target, every patient compatible, full coverage
        const std::vector<std::size_t> target = {7, 7, 6, 8};
        CHECK(list.size() == target[static_cast<std::size_t>(client - 1)]);
        std::set<int> carried;
        for (std::uint32_t p : list) {
            CHECK(seen.insert(p).second);
            for (int t : types[p]) {
                CHECK(profile.at(client).count(t) == 1);
                carried.insert(t);
            }
        }
        for (int t : profile.at(client)) {
            if (t != kBackgroundClass) {
                CHECK(carried.count(t) == 1);
            }
        }
    }
}

TEST_CASE("partition_e2 with an all-types map behaves like a ranged partition_e1") {
    std::map<std::uint32_t, std::set<int>> types;
    for (std::uint32_t p = 1; p <= 24; ++p) {
        types[p] = {1 + static_cast<int>(p % 4)};
    }
    ClientTypeMap everything;
    for (int c = 1; c <= 4; ++c) {
        everything[c] = {1, 2, 3, 4, kBackgroundClass};
    }
    const ClientAssignment a =
        partition_e2(typed_pool(types), 4, 7, {5, 6}, everything, {});
    std::set<std::uint32_t> seen;
    for (const auto& [client, list] : a.patients) {
        CHECK(list.size() >= 5);
        CHECK(list.size() <= 6);
        for (std::uint32_t p : list) {
            CHECK(seen.insert(p).second);
        }
    }
}

TEST_CASE("partition_e2 without any type-4 patient is infeasible") {
    std::map<std::uint32_t, std::set<int>> types;
    for (std::uint32_t p = 1; p <= 30; ++p) {
        types[p] = {1 + static_cast<int>(p % 3)};  // types 1..3 only
    }
    CHECK_THROWS_AS(partition_e2(typed_pool(types), 4, 0, {5, 8},
                                 default_client_types(), {}),
                    InfeasibleAssignment);
}

TEST_CASE("partition_e2 rejects a pool smaller than the targets") {
    std::map<std::uint32_t, std::set<int>> types;
    for (std::uint32_t p = 1; p <= 10; ++p) {
        types[p] = {1 + static_cast<int>(p % 4)};
    }
    CHECK_THROWS_AS(partition_e2(typed_pool(types), 4, 0, {5, 8},
                                 default_client_types(), {7, 7, 6, 8}),
                    InfeasibleAssignment);
}

TEST_CASE("partition_e2 is deterministic in the seed") {
    std::map<std::uint32_t, std::set<int>> types;
    for (std::uint32_t p = 1; p <= 32; ++p) {
        types[p] = {1 + static_cast<int>(p % 4)};
    }
    const auto a = partition_e2(typed_pool(types), 4, 5, {5, 8},
                                default_client_types(), {});
    const auto b = partition_e2(typed_pool(types), 4, 5, {5, 8},
                                default_client_types(), {});
    CHECK(a.patients == b.patients);
}

TEST_CASE("group_by_patient and patient_types_of summarize a pool") {
    std::vector<Embedding> pool;
    for (const auto& e : patient_pool(1, {{1, 2}, {5, 3}})) {
        pool.push_back(e);
    }
    for (const auto& e : patient_pool(2, {{4, 1}, {5, 1}})) {
        pool.push_back(e);
    }
    const auto grouped = group_by_patient(pool);
    REQUIRE(grouped.size() == 2);
    CHECK(grouped.at(1).size() == 5);
    CHECK(grouped.at(2).size() == 2);

    const auto types = patient_types_of(pool);
    REQUIRE(types.size() == 2);
    CHECK(types[0].patient_id == 1);
    CHECK(types[0].seizure_types == std::set<int>{1});  // background excluded
    CHECK(types[1].seizure_types == std::set<int>{4});
}
