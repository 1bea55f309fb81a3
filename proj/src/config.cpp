#include "fedshot/config.hpp"

#include <cstdlib>
#include <fstream>
#include <functional>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "fedshot/errors.hpp"
#include "fedshot/signal.hpp"

namespace fedshot {

namespace {

std::string trim(const std::string& s) {
    const auto begin = s.find_first_not_of(" \t\r\n");
    if (begin == std::string::npos) {
        return "";
    }
    const auto end = s.find_last_not_of(" \t\r\n");
    return s.substr(begin, end - begin + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value,
                            const char* expected) {
    std::ostringstream msg;
    msg << "key '" << key << "': cannot parse '" << value << "' as " << expected;
    throw ConfigError(msg.str());
}

long long parse_ll(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const long long v = std::stoll(value, &used);
        if (used != value.size()) {
            bad_value(key, value, "an integer");
        }
        return v;
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception&) {
        bad_value(key, value, "an integer");
    }
}

int parse_int(const std::string& key, const std::string& value) {
    return static_cast<int>(parse_ll(key, value));
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const unsigned long long v = std::stoull(value, &used);
        if (used != value.size() || !value.empty() && value.front() == '-') {
            bad_value(key, value, "an unsigned integer");
        }
        return v;
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception&) {
        bad_value(key, value, "an unsigned integer");
    }
}

std::size_t parse_size(const std::string& key, const std::string& value) {
    return static_cast<std::size_t>(parse_u64(key, value));
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size()) {
            bad_value(key, value, "a number");
        }
        return v;
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception&) {
        bad_value(key, value, "a number");
    }
}

std::vector<int> parse_int_list(const std::string& key, const std::string& value) {
    std::vector<int> out;
    if (trim(value).empty()) {
        return out;
    }
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        out.push_back(parse_int(key, trim(item)));
    }
    return out;
}

// "1:1,3,5;2:1,2,5" -> {1: {1,3,5}, 2: {1,2,5}}
ClientTypeMap parse_type_map(const std::string& key, const std::string& value) {
    ClientTypeMap out;
    if (trim(value).empty()) {
        return out;
    }
    std::stringstream ss(value);
    std::string entry;
    while (std::getline(ss, entry, ';')) {
        entry = trim(entry);
        if (entry.empty()) {
            continue;
        }
        const auto colon = entry.find(':');
        if (colon == std::string::npos) {
            bad_value(key, entry, "client:type,type,...");
        }
        const int client = parse_int(key, trim(entry.substr(0, colon)));
        std::set<int> types;
        for (int t : parse_int_list(key, entry.substr(colon + 1))) {
            types.insert(t);
        }
        if (!out.emplace(client, std::move(types)).second) {
            std::ostringstream msg;
            msg << "key '" << key << "': client " << client << " listed twice";
            throw ConfigError(msg.str());
        }
    }
    return out;
}

std::string fmt_double(double v) {
    std::ostringstream ss;
    ss << std::setprecision(17) << v;
    return ss.str();
}

std::string fmt_int_list(const std::vector<int>& v) {
    std::ostringstream ss;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) {
            ss << ",";
        }
        ss << v[i];
    }
    return ss.str();
}

std::string fmt_type_map(const ClientTypeMap& m) {
    std::ostringstream ss;
    bool first_entry = true;
    for (const auto& [client, types] : m) {
        if (!first_entry) {
            ss << ";";
        }
        first_entry = false;
        ss << client << ":";
        bool first_type = true;
        for (int t : types) {
            if (!first_type) {
                ss << ",";
            }
            first_type = false;
            ss << t;
        }
    }
    return ss.str();
}

struct KeyDesc {
    const char* name;
    std::function<void(ExperimentConfig&, const std::string&)> set;
    std::function<std::string(const ExperimentConfig&)> get;
};

const std::vector<KeyDesc>& registry() {
    using C = ExperimentConfig;
    static const std::vector<KeyDesc> keys = {
        {"mode", [](C& c, const std::string& v) { c.mode = v; },
         [](const C& c) { return c.mode; }},
        {"seed", [](C& c, const std::string& v) { c.seed = parse_u64("seed", v); },
         [](const C& c) { return std::to_string(c.seed); }},
        {"out_dir", [](C& c, const std::string& v) { c.out_dir = v; },
         [](const C& c) { return c.out_dir; }},
        {"threads", [](C& c, const std::string& v) { c.threads = parse_int("threads", v); },
         [](const C& c) { return std::to_string(c.threads); }},
        {"n_clients",
         [](C& c, const std::string& v) { c.n_clients = parse_int("n_clients", v); },
         [](const C& c) { return std::to_string(c.n_clients); }},
        {"alpha", [](C& c, const std::string& v) { c.alpha = parse_double("alpha", v); },
         [](const C& c) { return fmt_double(c.alpha); }},
        {"avg", [](C& c, const std::string& v) { c.avg = v; },
         [](const C& c) { return c.avg; }},
        {"channels",
         [](C& c, const std::string& v) {
             c.channels.clear();
             std::stringstream ss(v);
             std::string item;
             while (std::getline(ss, item, ',')) {
                 item = trim(item);
                 if (!item.empty()) {
                     c.channels.push_back(item);
                 }
             }
         },
         [](const C& c) {
             std::ostringstream ss;
             for (std::size_t i = 0; i < c.channels.size(); ++i) {
                 if (i) {
                     ss << ",";
                 }
                 ss << c.channels[i];
             }
             return ss.str();
         }},
        {"window_s",
         [](C& c, const std::string& v) { c.window_s = parse_double("window_s", v); },
         [](const C& c) { return fmt_double(c.window_s); }},
        {"hop_s", [](C& c, const std::string& v) { c.hop_s = parse_double("hop_s", v); },
         [](const C& c) { return fmt_double(c.hop_s); }},
        {"target_rate_hz",
         [](C& c, const std::string& v) {
             c.target_rate_hz = parse_double("target_rate_hz", v);
         },
         [](const C& c) { return fmt_double(c.target_rate_hz); }},
        {"embedding_dim",
         [](C& c, const std::string& v) {
             c.embedding_dim = parse_size("embedding_dim", v);
         },
         [](const C& c) { return std::to_string(c.embedding_dim); }},
        {"hidden_dim",
         [](C& c, const std::string& v) { c.hidden_dim = parse_size("hidden_dim", v); },
         [](const C& c) { return std::to_string(c.hidden_dim); }},
        {"e1.lr", [](C& c, const std::string& v) { c.e1_lr = parse_double("e1.lr", v); },
         [](const C& c) { return fmt_double(c.e1_lr); }},
        {"e1.local_epochs",
         [](C& c, const std::string& v) {
             c.e1_local_epochs = parse_int("e1.local_epochs", v);
         },
         [](const C& c) { return std::to_string(c.e1_local_epochs); }},
        {"e1.batch_size",
         [](C& c, const std::string& v) {
             c.e1_batch_size = parse_size("e1.batch_size", v);
         },
         [](const C& c) { return std::to_string(c.e1_batch_size); }},
        {"e1.max_rounds",
         [](C& c, const std::string& v) {
             c.e1_max_rounds = parse_int("e1.max_rounds", v);
         },
         [](const C& c) { return std::to_string(c.e1_max_rounds); }},
        {"e1.patience",
         [](C& c, const std::string& v) { c.e1_patience = parse_int("e1.patience", v); },
         [](const C& c) { return std::to_string(c.e1_patience); }},
        {"e1.val_fraction",
         [](C& c, const std::string& v) {
             c.e1_val_fraction = parse_double("e1.val_fraction", v);
         },
         [](const C& c) { return fmt_double(c.e1_val_fraction); }},
        {"e2.lr", [](C& c, const std::string& v) { c.e2_lr = parse_double("e2.lr", v); },
         [](const C& c) { return fmt_double(c.e2_lr); }},
        {"e2.local_epochs",
         [](C& c, const std::string& v) {
             c.e2_local_epochs = parse_int("e2.local_epochs", v);
         },
         [](const C& c) { return std::to_string(c.e2_local_epochs); }},
        {"e2.batch_size",
         [](C& c, const std::string& v) {
             c.e2_batch_size = parse_size("e2.batch_size", v);
         },
         [](const C& c) { return std::to_string(c.e2_batch_size); }},
        {"e2.max_rounds",
         [](C& c, const std::string& v) {
             c.e2_max_rounds = parse_int("e2.max_rounds", v);
         },
         [](const C& c) { return std::to_string(c.e2_max_rounds); }},
        {"e2.patience",
         [](C& c, const std::string& v) { c.e2_patience = parse_int("e2.patience", v); },
         [](const C& c) { return std::to_string(c.e2_patience); }},
        {"e2.patients_lo",
         [](C& c, const std::string& v) {
             c.e2_patients_lo = parse_int("e2.patients_lo", v);
         },
         [](const C& c) { return std::to_string(c.e2_patients_lo); }},
        {"e2.patients_hi",
         [](C& c, const std::string& v) {
             c.e2_patients_hi = parse_int("e2.patients_hi", v);
         },
         [](const C& c) { return std::to_string(c.e2_patients_hi); }},
        {"e2.target_counts",
         [](C& c, const std::string& v) {
             c.e2_target_counts = parse_int_list("e2.target_counts", v);
         },
         [](const C& c) { return fmt_int_list(c.e2_target_counts); }},
        {"e2.head_init", [](C& c, const std::string& v) { c.e2_head_init = v; },
         [](const C& c) { return c.e2_head_init; }},
        {"client_types",
         [](C& c, const std::string& v) {
             c.client_types = parse_type_map("client_types", v);
         },
         [](const C& c) { return fmt_type_map(c.client_types); }},
        {"synth.kind", [](C& c, const std::string& v) { c.synth_kind = v; },
         [](const C& c) { return c.synth_kind; }},
        {"synth.patient_classes",
         [](C& c, const std::string& v) { c.synth_patient_classes = v; },
         [](const C& c) { return c.synth_patient_classes; }},
        {"synth.patients",
         [](C& c, const std::string& v) {
             c.synth_patients = parse_size("synth.patients", v);
         },
         [](const C& c) { return std::to_string(c.synth_patients); }},
        {"synth.first_patient",
         [](C& c, const std::string& v) {
             c.synth_first_patient =
                 static_cast<std::uint32_t>(parse_u64("synth.first_patient", v));
         },
         [](const C& c) { return std::to_string(c.synth_first_patient); }},
        {"synth.sample_rate_hz",
         [](C& c, const std::string& v) {
             c.synth_sample_rate_hz = parse_double("synth.sample_rate_hz", v);
         },
         [](const C& c) { return fmt_double(c.synth_sample_rate_hz); }},
        {"synth.segment_s",
         [](C& c, const std::string& v) {
             c.synth_segment_s = parse_double("synth.segment_s", v);
         },
         [](const C& c) { return fmt_double(c.synth_segment_s); }},
        {"synth.segments_per_class",
         [](C& c, const std::string& v) {
             c.synth_segments_per_class = parse_size("synth.segments_per_class", v);
         },
         [](const C& c) { return std::to_string(c.synth_segments_per_class); }},
        {"synth.classes",
         [](C& c, const std::string& v) {
             c.synth_classes = parse_int_list("synth.classes", v);
         },
         [](const C& c) { return fmt_int_list(c.synth_classes); }},
        {"synth.noise_level",
         [](C& c, const std::string& v) {
             c.synth_noise_level = parse_double("synth.noise_level", v);
         },
         [](const C& c) { return fmt_double(c.synth_noise_level); }},
        {"synth.perturbation",
         [](C& c, const std::string& v) {
             c.synth_perturbation = parse_double("synth.perturbation", v);
         },
         [](const C& c) { return fmt_double(c.synth_perturbation); }},
        {"data.segments", [](C& c, const std::string& v) { c.data_segments = v; },
         [](const C& c) { return c.data_segments; }},
        {"data.embeddings", [](C& c, const std::string& v) { c.data_embeddings = v; },
         [](const C& c) { return c.data_embeddings; }},
        {"data.checkpoint", [](C& c, const std::string& v) { c.data_checkpoint = v; },
         [](const C& c) { return c.data_checkpoint; }},
    };
    return keys;
}

void require(bool ok, const char* what) {
    if (!ok) {
        throw ConfigError(what);
    }
}

} // namespace

void ExperimentConfig::validate() const {
    require(mode == "synth" || mode == "prep" || mode == "e1" || mode == "e2" ||
                mode == "pca" || mode == "report",
            "mode must be one of synth, prep, e1, e2, pca, report");
    require(threads >= 0, "threads must be nonnegative");
    require(n_clients >= 1, "n_clients must be at least 1");
    require(alpha >= 0.0 && alpha <= 1.0, "alpha must lie in [0, 1]");
    require(avg == "weighted" || avg == "uniform", "avg must be weighted or uniform");
    require(window_s > 0.0, "window_s must be positive");
    require(hop_s > 0.0, "hop_s must be positive");
    require(target_rate_hz > 0.0, "target_rate_hz must be positive");
    require(embedding_dim > 0, "embedding_dim must be positive");
    require(hidden_dim > 0, "hidden_dim must be positive");
    require(e1_lr >= 0.0 && e2_lr >= 0.0, "learning rates must be nonnegative");
    require(e1_local_epochs >= 1 && e2_local_epochs >= 1,
            "local_epochs must be at least 1");
    require(e1_max_rounds >= 1 && e2_max_rounds >= 1, "max_rounds must be at least 1");
    require(e1_patience >= 1 && e2_patience >= 1, "patience must be at least 1");
    require(e1_val_fraction >= 0.0 && e1_val_fraction < 1.0,
            "e1.val_fraction must lie in [0, 1)");
    require(e2_patients_lo >= 1 && e2_patients_hi >= e2_patients_lo,
            "e2 patient range must satisfy 1 <= lo <= hi");
    if (!e2_target_counts.empty()) {
        require(e2_target_counts.size() == static_cast<std::size_t>(n_clients),
                "e2.target_counts must list one count per client");
        for (int t : e2_target_counts) {
            require(t >= e2_patients_lo && t <= e2_patients_hi,
                    "e2.target_counts entries must lie in the patient range");
        }
    }
    require(e2_head_init == "checkpoint" || e2_head_init == "fresh",
            "e2.head_init must be checkpoint or fresh");
    require(synth_kind == "recordings" || synth_kind == "embeddings",
            "synth.kind must be recordings or embeddings");
    require(synth_patient_classes == "all" || synth_patient_classes == "cycle",
            "synth.patient_classes must be all or cycle");
    require(synth_patients >= 1, "synth.patients must be positive");
    require(synth_sample_rate_hz > 0.0, "synth.sample_rate_hz must be positive");
    require(synth_segment_s > 0.0, "synth.segment_s must be positive");
    require(synth_segments_per_class >= 1, "synth.segments_per_class must be positive");
    require(!synth_classes.empty(), "synth.classes must not be empty");
    for (int c : synth_classes) {
        require(c >= 0 && c <= 5, "synth.classes entries must lie in 0..5");
    }
    require(synth_noise_level > 0.0, "synth.noise_level must be positive");
    require(synth_perturbation >= 0.0, "synth.perturbation must be nonnegative");
}

void apply_override(ExperimentConfig& cfg, const std::string& key,
                    const std::string& value) {
    for (const auto& desc : registry()) {
        if (key == desc.name) {
            desc.set(cfg, value);
            return;
        }
    }
    std::ostringstream msg;
    msg << "unknown config key '" << key << "'";
    throw ConfigError(msg.str());
}

ExperimentConfig load_config(const std::string& path, ExperimentConfig defaults) {
    std::ifstream in(path);
    if (!in) {
        std::ostringstream msg;
        msg << "cannot open config file '" << path << "'";
        throw ConfigError(msg.str());
    }
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string t = trim(line);
        if (t.empty() || t.front() == '#') {
            continue;
        }
        const auto eq = t.find('=');
        if (eq == std::string::npos) {
            std::ostringstream msg;
            msg << path << ":" << line_no << ": expected key = value, got '" << t << "'";
            throw ConfigError(msg.str());
        }
        try {
            apply_override(defaults, trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
        } catch (const ConfigError& e) {
            std::ostringstream msg;
            msg << path << ":" << line_no << ": " << e.what();
            throw ConfigError(msg.str());
        }
    }
    return defaults;
}

void write_config(std::ostream& os, const ExperimentConfig& cfg) {
    for (const auto& desc : registry()) {
        os << desc.name << " = " << desc.get(cfg) << "\n";
    }
}

const std::vector<std::string>& resolved_channels(const ExperimentConfig& cfg) {
    return cfg.channels.empty() ? default_channel_names() : cfg.channels;
}

int effective_threads(const ExperimentConfig& cfg) {
    int cap = 0;
    if (const char* env = std::getenv("FEDSHOT_THREADS")) {
        try {
            cap = std::stoi(env);
        } catch (const std::exception&) {
            cap = 0;
        }
    }
    if (cap <= 0) {
        return cfg.threads;
    }
    if (cfg.threads <= 0) {
        return cap;
    }
    return std::min(cfg.threads, cap);
}

} // namespace fedshot
