#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <vector>

#include "fedshot/embed.hpp"

namespace fedshot {

/// Background class id under the six-class scheme.
inline constexpr int kBackgroundClass = 5;

inline bool is_seizure_class(int label) { return label != kBackgroundClass; }

/// Per-patient few-shot split: 5 support (4 seizure + 1 background),
/// 10 validation, 20 query, pairwise disjoint by segment id.
struct FewShotTask {
    std::uint32_t patient_id = 0;
    std::vector<Embedding> support;
    std::vector<Embedding> validation;
    std::vector<Embedding> query;

    /// Throws InvalidSpec when any task invariant is violated.
    void validate() const;
};

inline constexpr std::size_t kSupportSize = 5;
inline constexpr std::size_t kSupportSeizure = 4;
inline constexpr std::size_t kValidationSize = 10;
inline constexpr std::size_t kQuerySize = 20;
inline constexpr std::size_t kMinTaskSegments = 35;

/// client_id -> patient list; client ids are 1-based as in run reports.
struct ClientAssignment {
    std::map<int, std::vector<std::uint32_t>> patients;

    /// Throws InvalidSpec if a patient appears under two clients.
    void validate_disjoint() const;
};

/// Seeded shuffle then round-robin deal; sizes differ by at most one.
ClientAssignment partition_e1(const std::vector<std::uint32_t>& patients,
                              int n_clients, std::uint64_t seed);

/// A patient together with the set of seizure classes present in their
/// segments (background excluded).
struct PatientTypes {
    std::uint32_t patient_id = 0;
    std::set<int> seizure_types;
};

/// Per-client allowed seizure types. A client entry may list the
/// background class; it is documentary, since background segments are
/// permitted at every client.
using ClientTypeMap = std::map<int, std::set<int>>;

/// The per-client type profile used throughout: client 1 hosts {1,3,5},
/// client 2 {1,2,5}, client 3 {2,3,4}, client 4 {2,3,5}.
ClientTypeMap default_client_types();

/// Seeded non-IID assignment. Each assigned patient's seizure types must
/// fit inside the client's profile, every profiled seizure type must be
/// covered by at least one patient, and per-client counts land inside
/// per_client_range (or exactly on target_counts when given).
ClientAssignment partition_e2(const std::vector<PatientTypes>& pool,
                              int n_clients, std::uint64_t seed,
                              std::pair<int, int> per_client_range = {5, 8},
                              const ClientTypeMap& type_map = default_client_types(),
                              const std::vector<int>& target_counts = {});

/// Sample a task from one patient's embedded segments: 4 seizure + 1
/// background support shots, then 10 validation and 20 query segments
/// drawn uniformly from the remainder (the natural class mix is kept).
FewShotTask build_task(const std::vector<Embedding>& patient_segments,
                       std::uint64_t seed);

/// Group embeddings by patient id (keys ascending).
std::map<std::uint32_t, std::vector<Embedding>> group_by_patient(
    const std::vector<Embedding>& embeddings);

/// Seizure types present per patient, derived from segment labels.
std::vector<PatientTypes> patient_types_of(
    const std::vector<Embedding>& embeddings);

} // namespace fedshot
