#include "fedshot/episode.hpp"

#include <algorithm>
#include <set>
#include <sstream>

#include "fedshot/errors.hpp"
#include "fedshot/rng.hpp"

namespace fedshot {

namespace {

void collect_ids(const std::vector<Embedding>& part, std::set<std::uint64_t>& seen,
                 const char* part_name) {
    for (const auto& e : part) {
        if (!seen.insert(e.segment_id).second) {
            std::ostringstream msg;
            msg << "segment " << e.segment_id << " repeated in task (" << part_name << ")";
            throw InvalidSpec(msg.str());
        }
    }
}

void check_patient(const std::vector<Embedding>& part, std::uint32_t patient_id) {
    for (const auto& e : part) {
        if (e.patient_id != patient_id) {
            std::ostringstream msg;
            msg << "task for patient " << patient_id << " contains segment from patient "
                << e.patient_id;
            throw InvalidSpec(msg.str());
        }
    }
}

} // namespace

void FewShotTask::validate() const {
    if (support.size() != kSupportSize) {
        std::ostringstream msg;
        msg << "support set has " << support.size() << " segments, expected " << kSupportSize;
        throw InvalidSpec(msg.str());
    }
    if (validation.size() != kValidationSize) {
        std::ostringstream msg;
        msg << "validation set has " << validation.size() << " segments, expected "
            << kValidationSize;
        throw InvalidSpec(msg.str());
    }
    if (query.size() != kQuerySize) {
        std::ostringstream msg;
        msg << "query set has " << query.size() << " segments, expected " << kQuerySize;
        throw InvalidSpec(msg.str());
    }
    std::size_t seizure = 0;
    std::size_t background = 0;
    for (const auto& e : support) {
        if (is_seizure_class(e.label)) {
            ++seizure;
        } else {
            ++background;
        }
    }
    if (seizure != kSupportSeizure || background != kSupportSize - kSupportSeizure) {
        std::ostringstream msg;
        msg << "support set has " << seizure << " seizure and " << background
            << " background segments, expected " << kSupportSeizure << " and "
            << (kSupportSize - kSupportSeizure);
        throw InvalidSpec(msg.str());
    }
    std::set<std::uint64_t> seen;
    collect_ids(support, seen, "support");
    collect_ids(validation, seen, "validation");
    collect_ids(query, seen, "query");
    check_patient(support, patient_id);
    check_patient(validation, patient_id);
    check_patient(query, patient_id);
}

void ClientAssignment::validate_disjoint() const {
    std::set<std::uint32_t> seen;
    for (const auto& [client, list] : patients) {
        for (std::uint32_t p : list) {
            if (!seen.insert(p).second) {
                std::ostringstream msg;
                msg << "patient " << p << " assigned to more than one client";
                throw InvalidSpec(msg.str());
            }
        }
        (void)client;
    }
}

ClientAssignment partition_e1(const std::vector<std::uint32_t>& patients, int n_clients,
                              std::uint64_t seed) {
    if (n_clients < 1) {
        throw NoClients("client count must be positive");
    }
    if (patients.size() < static_cast<std::size_t>(n_clients)) {
        std::ostringstream msg;
        msg << patients.size() << " patients cannot cover " << n_clients << " clients";
        throw TooFewPatients(msg.str());
    }
    std::vector<std::uint32_t> order = patients;
    auto rng = make_rng(mix_seed(seed, 0x65317061ULL)); // "e1pa"
    seeded_shuffle(order, rng);

    ClientAssignment out;
    for (int c = 1; c <= n_clients; ++c) {
        out.patients[c];
    }
    for (std::size_t i = 0; i < order.size(); ++i) {
        const int client = 1 + static_cast<int>(i % static_cast<std::size_t>(n_clients));
        out.patients[client].push_back(order[i]);
    }
    out.validate_disjoint();
    return out;
}

ClientTypeMap default_client_types() {
    return {
        {1, {1, 3, 5}},
        {2, {1, 2, 5}},
        {3, {2, 3, 4}},
        {4, {2, 3, 5}},
    };
}

namespace {

// Seizure-type profile a client hosts: its type-map entry minus the background
// marker. A client with no entry accepts every seizure type.
std::set<int> seizure_profile(const ClientTypeMap& type_map, int client) {
    auto it = type_map.find(client);
    if (it == type_map.end()) {
        return {0, 1, 2, 3, 4};
    }
    std::set<int> profile;
    for (int t : it->second) {
        if (t != kBackgroundClass) {
            profile.insert(t);
        }
    }
    return profile;
}

bool compatible(const PatientTypes& p, const std::set<int>& profile) {
    if (p.seizure_types.empty()) {
        // a patient with no seizure activity cannot seed a few-shot task
        return false;
    }
    return std::all_of(p.seizure_types.begin(), p.seizure_types.end(),
                       [&](int t) { return profile.count(t) > 0; });
}

} // namespace

ClientAssignment partition_e2(const std::vector<PatientTypes>& pool, int n_clients,
                              std::uint64_t seed, std::pair<int, int> per_client_range,
                              const ClientTypeMap& type_map,
                              const std::vector<int>& target_counts) {
    if (n_clients < 1) {
        throw NoClients("client count must be positive");
    }
    const int lo = per_client_range.first;
    const int hi = per_client_range.second;
    if (lo < 1 || hi < lo) {
        std::ostringstream msg;
        msg << "patients-per-client range [" << lo << ", " << hi << "] is invalid";
        throw InvalidSpec(msg.str());
    }

    auto rng = make_rng(mix_seed(seed, 0x65327061ULL)); // "e2pa"

    std::vector<int> targets;
    if (!target_counts.empty()) {
        if (target_counts.size() != static_cast<std::size_t>(n_clients)) {
            std::ostringstream msg;
            msg << target_counts.size() << " target counts given for " << n_clients
                << " clients";
            throw InvalidSpec(msg.str());
        }
        for (int t : target_counts) {
            if (t < lo || t > hi) {
                std::ostringstream msg;
                msg << "target count " << t << " outside range [" << lo << ", " << hi << "]";
                throw InvalidSpec(msg.str());
            }
        }
        targets = target_counts;
    } else {
        targets.reserve(static_cast<std::size_t>(n_clients));
        for (int c = 0; c < n_clients; ++c) {
            targets.push_back(
                lo + static_cast<int>(bounded(rng, static_cast<std::uint64_t>(hi - lo + 1))));
        }
    }

    std::size_t total_target = 0;
    for (int t : targets) {
        total_target += static_cast<std::size_t>(t);
    }
    if (total_target > pool.size()) {
        std::ostringstream msg;
        msg << "pool of " << pool.size() << " patients cannot fill " << total_target
            << " slots";
        throw InfeasibleAssignment(msg.str());
    }

    std::vector<std::set<int>> profiles;
    profiles.reserve(static_cast<std::size_t>(n_clients));
    for (int c = 1; c <= n_clients; ++c) {
        profiles.push_back(seizure_profile(type_map, c));
    }

    std::vector<bool> taken(pool.size(), false);
    std::vector<std::vector<std::uint32_t>> assigned(static_cast<std::size_t>(n_clients));
    std::vector<std::set<int>> covered(static_cast<std::size_t>(n_clients));

    auto assign = [&](std::size_t pool_idx, std::size_t client_idx) {
        taken[pool_idx] = true;
        assigned[client_idx].push_back(pool[pool_idx].patient_id);
        for (int t : pool[pool_idx].seizure_types) {
            covered[client_idx].insert(t);
        }
    };

    // Phase 1: every seizure type a client hosts must appear in at least one of
    // its patients. Walk clients and types in ascending order and draw uniformly
    // among the still-free compatible carriers of the missing type.
    for (std::size_t ci = 0; ci < profiles.size(); ++ci) {
        for (int t : profiles[ci]) {
            if (covered[ci].count(t) > 0) {
                continue;
            }
            if (assigned[ci].size() >= static_cast<std::size_t>(targets[ci])) {
                std::ostringstream msg;
                msg << "client " << (ci + 1) << " is full before covering seizure type " << t;
                throw InfeasibleAssignment(msg.str());
            }
            std::vector<std::size_t> candidates;
            for (std::size_t pi = 0; pi < pool.size(); ++pi) {
                if (!taken[pi] && pool[pi].seizure_types.count(t) > 0 &&
                    compatible(pool[pi], profiles[ci])) {
                    candidates.push_back(pi);
                }
            }
            if (candidates.empty()) {
                std::ostringstream msg;
                msg << "no available patient carries seizure type " << t << " for client "
                    << (ci + 1);
                throw InfeasibleAssignment(msg.str());
            }
            const std::size_t pick = candidates[static_cast<std::size_t>(
                bounded(rng, static_cast<std::uint64_t>(candidates.size())))];
            assign(pick, ci);
        }
    }

    // Phase 2: fill remaining slots, serving the scarcest client first. Slack is
    // how many compatible free patients a client could lose before its remaining
    // slots become unfillable.
    for (;;) {
        std::vector<std::size_t> open;
        for (std::size_t ci = 0; ci < assigned.size(); ++ci) {
            if (assigned[ci].size() < static_cast<std::size_t>(targets[ci])) {
                open.push_back(ci);
            }
        }
        if (open.empty()) {
            break;
        }
        std::size_t best = open.front();
        long best_slack = 0;
        bool have_best = false;
        for (std::size_t ci : open) {
            long avail = 0;
            for (std::size_t pi = 0; pi < pool.size(); ++pi) {
                if (!taken[pi] && compatible(pool[pi], profiles[ci])) {
                    ++avail;
                }
            }
            const long needed = static_cast<long>(targets[ci]) -
                                static_cast<long>(assigned[ci].size());
            const long slack = avail - needed;
            if (slack < 0) {
                std::ostringstream msg;
                msg << "client " << (ci + 1) << " needs " << needed
                    << " more patients but only " << avail << " compatible remain";
                throw InfeasibleAssignment(msg.str());
            }
            if (!have_best || slack < best_slack) {
                have_best = true;
                best_slack = slack;
                best = ci;
            }
        }
        std::vector<std::size_t> candidates;
        for (std::size_t pi = 0; pi < pool.size(); ++pi) {
            if (!taken[pi] && compatible(pool[pi], profiles[best])) {
                candidates.push_back(pi);
            }
        }
        const std::size_t pick = candidates[static_cast<std::size_t>(
            bounded(rng, static_cast<std::uint64_t>(candidates.size())))];
        assign(pick, best);
    }

    ClientAssignment out;
    for (std::size_t ci = 0; ci < assigned.size(); ++ci) {
        out.patients[static_cast<int>(ci) + 1] = assigned[ci];
    }
    out.validate_disjoint();
    return out;
}

FewShotTask build_task(const std::vector<Embedding>& patient_segments, std::uint64_t seed) {
    if (patient_segments.empty()) {
        throw InsufficientSegments("no segments for task construction");
    }
    const std::uint32_t patient_id = patient_segments.front().patient_id;
    for (const auto& e : patient_segments) {
        if (e.patient_id != patient_id) {
            std::ostringstream msg;
            msg << "task input mixes patients " << patient_id << " and " << e.patient_id;
            throw InvalidSpec(msg.str());
        }
    }

    std::vector<std::size_t> seizure_idx;
    std::vector<std::size_t> background_idx;
    for (std::size_t i = 0; i < patient_segments.size(); ++i) {
        if (is_seizure_class(patient_segments[i].label)) {
            seizure_idx.push_back(i);
        } else {
            background_idx.push_back(i);
        }
    }
    if (seizure_idx.size() < kSupportSeizure) {
        std::ostringstream msg;
        msg << "patient " << patient_id << " has " << seizure_idx.size()
            << " seizure segments, support needs " << kSupportSeizure;
        throw InsufficientSeizureSegments(msg.str());
    }
    if (background_idx.empty()) {
        std::ostringstream msg;
        msg << "patient " << patient_id << " has no background segment for the support set";
        throw InsufficientSegments(msg.str());
    }
    if (patient_segments.size() < kMinTaskSegments) {
        std::ostringstream msg;
        msg << "patient " << patient_id << " has " << patient_segments.size()
            << " segments, a task needs " << kMinTaskSegments;
        throw InsufficientSegments(msg.str());
    }

    auto rng = make_rng(mix_seed(seed, 0x7461736bULL)); // "task"

    std::vector<bool> used(patient_segments.size(), false);
    FewShotTask task;
    task.patient_id = patient_id;

    for (std::size_t pos : sample_without_replacement(rng, seizure_idx.size(), kSupportSeizure)) {
        used[seizure_idx[pos]] = true;
        task.support.push_back(patient_segments[seizure_idx[pos]]);
    }
    {
        const std::size_t pos = static_cast<std::size_t>(
            bounded(rng, static_cast<std::uint64_t>(background_idx.size())));
        used[background_idx[pos]] = true;
        task.support.push_back(patient_segments[background_idx[pos]]);
    }

    std::vector<std::size_t> rest;
    for (std::size_t i = 0; i < patient_segments.size(); ++i) {
        if (!used[i]) {
            rest.push_back(i);
        }
    }
    seeded_shuffle(rest, rng);
    for (std::size_t i = 0; i < kValidationSize; ++i) {
        task.validation.push_back(patient_segments[rest[i]]);
    }
    for (std::size_t i = 0; i < kQuerySize; ++i) {
        task.query.push_back(patient_segments[rest[kValidationSize + i]]);
    }

    task.validate();
    return task;
}

std::map<std::uint32_t, std::vector<Embedding>> group_by_patient(
    const std::vector<Embedding>& segments) {
    std::map<std::uint32_t, std::vector<Embedding>> out;
    for (const auto& e : segments) {
        out[e.patient_id].push_back(e);
    }
    return out;
}

std::vector<PatientTypes> patient_types_of(const std::vector<Embedding>& segments) {
    std::map<std::uint32_t, std::set<int>> types;
    for (const auto& e : segments) {
        auto& entry = types[e.patient_id];
        if (is_seizure_class(e.label)) {
            entry.insert(static_cast<int>(e.label));
        }
    }
    std::vector<PatientTypes> out;
    out.reserve(types.size());
    for (auto& [pid, ts] : types) {
        out.push_back(PatientTypes{pid, std::move(ts)});
    }
    return out;
}

} // namespace fedshot
