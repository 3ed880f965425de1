#include "uep/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <exception>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace fs = std::filesystem;
using nlohmann::json;

namespace uep {

const char* to_string(ExperimentMode m) {
    switch (m) {
        case ExperimentMode::ae_message_wise: return "ae_message_wise";
        case ExperimentMode::ae_bit_wise: return "ae_bit_wise";
        case ExperimentMode::ae_progressive: return "ae_progressive";
        case ExperimentMode::baseline_coset: return "baseline_coset";
        case ExperimentMode::baseline_superposition: return "baseline_superposition";
    }
    return "?";
}

bool is_ae_mode(ExperimentMode m) {
    return m == ExperimentMode::ae_message_wise || m == ExperimentMode::ae_bit_wise ||
           m == ExperimentMode::ae_progressive;
}

ClassPartition ExperimentConfig::partition() const {
    switch (mode) {
        case ExperimentMode::ae_message_wise:
            return ClassPartition::message_wise(class_sizes);
        case ExperimentMode::ae_bit_wise:
            return ClassPartition::bit_wise(bit_lengths);
        case ExperimentMode::ae_progressive:
            return ClassPartition::progressive(bit_lengths);
        case ExperimentMode::baseline_coset: {
            std::vector<std::size_t> sizes;
            for (unsigned k : bit_lengths) sizes.push_back(std::size_t{1} << k);
            return ClassPartition::message_wise(sizes);
        }
        case ExperimentMode::baseline_superposition:
            return ClassPartition::bit_wise(bit_lengths);
    }
    throw std::logic_error("unreachable");
}

// ---------------------------------------------------------------------------
// Config parsing. Every object is read through a checker that records which
// keys were consumed; leftovers are hard errors with their JSON path.

namespace {

class ObjectReader {
public:
    ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(path_ + ": expected an object");
    }

    const json& require(const std::string& key) {
        consumed_.insert(key);
        auto it = j_.find(key);
        if (it == j_.end()) throw ConfigError(path_ + ": missing required key '" + key + "'");
        return *it;
    }

    const json* optional(const std::string& key) {
        consumed_.insert(key);
        auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    void forbid(const std::string& key, const std::string& why) {
        if (j_.contains(key)) throw ConfigError(path_ + "." + key + ": " + why);
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!consumed_.count(it.key()))
                throw ConfigError(path_ + ": unknown key '" + it.key() + "'");
    }

    std::string sub(const std::string& key) const { return path_ + "." + key; }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> consumed_;
};

double as_double(const json& j, const std::string& path) {
    if (!j.is_number()) throw ConfigError(path + ": expected a number");
    return j.get<double>();
}

std::uint64_t as_u64(const json& j, const std::string& path) {
    if (!j.is_number_unsigned() && !j.is_number_integer())
        throw ConfigError(path + ": expected a nonnegative integer");
    if (j.is_number_integer() && j.get<std::int64_t>() < 0)
        throw ConfigError(path + ": expected a nonnegative integer");
    return j.get<std::uint64_t>();
}

std::vector<double> as_double_list(const json& j, const std::string& path) {
    if (!j.is_array() || j.empty()) throw ConfigError(path + ": expected a non-empty array");
    std::vector<double> out;
    for (std::size_t i = 0; i < j.size(); ++i)
        out.push_back(as_double(j[i], path + "[" + std::to_string(i) + "]"));
    return out;
}

template <typename T>
std::vector<T> as_uint_list(const json& j, const std::string& path) {
    if (!j.is_array() || j.empty()) throw ConfigError(path + ": expected a non-empty array");
    std::vector<T> out;
    for (std::size_t i = 0; i < j.size(); ++i)
        out.push_back(static_cast<T>(as_u64(j[i], path + "[" + std::to_string(i) + "]")));
    return out;
}

std::string as_string(const json& j, const std::string& path) {
    if (!j.is_string()) throw ConfigError(path + ": expected a string");
    return j.get<std::string>();
}

ExperimentMode parse_mode(const std::string& s, const std::string& path) {
    for (ExperimentMode m :
         {ExperimentMode::ae_message_wise, ExperimentMode::ae_bit_wise,
          ExperimentMode::ae_progressive, ExperimentMode::baseline_coset,
          ExperimentMode::baseline_superposition})
        if (s == to_string(m)) return m;
    throw ConfigError(path + ": unknown mode '" + s + "'");
}

SuperpositionSpec::Normalization parse_normalization(const std::string& s,
                                                     const std::string& path) {
    if (s == "per_codeword") return SuperpositionSpec::Normalization::per_codeword;
    if (s == "codebook_average") return SuperpositionSpec::Normalization::codebook_average;
    throw ConfigError(path + ": expected 'per_codeword' or 'codebook_average'");
}

TrainSection parse_train(const json& j, const std::string& path) {
    ObjectReader r(j, path);
    TrainSection t;
    if (const json* v = r.optional("ebn0_db")) t.ebn0_db = as_double(*v, r.sub("ebn0_db"));
    if (const json* v = r.optional("batch_size")) {
        t.batch_size = static_cast<std::size_t>(as_u64(*v, r.sub("batch_size")));
        if (t.batch_size < 1) throw ConfigError(r.sub("batch_size") + ": must be >= 1");
    }
    if (const json* v = r.optional("num_iterations")) {
        t.num_iterations = static_cast<std::size_t>(as_u64(*v, r.sub("num_iterations")));
        if (t.num_iterations < 1) throw ConfigError(r.sub("num_iterations") + ": must be >= 1");
    }
    if (const json* v = r.optional("encoder_hidden"))
        t.encoder_hidden = as_uint_list<std::size_t>(*v, r.sub("encoder_hidden"));
    if (const json* v = r.optional("decoder_hidden"))
        t.decoder_hidden = as_uint_list<std::size_t>(*v, r.sub("decoder_hidden"));
    if (const json* v = r.optional("adam")) {
        ObjectReader ar(*v, r.sub("adam"));
        if (const json* w = ar.optional("alpha")) t.adam.alpha = as_double(*w, ar.sub("alpha"));
        if (const json* w = ar.optional("beta1")) t.adam.beta1 = as_double(*w, ar.sub("beta1"));
        if (const json* w = ar.optional("beta2")) t.adam.beta2 = as_double(*w, ar.sub("beta2"));
        if (const json* w = ar.optional("epsilon"))
            t.adam.epsilon = as_double(*w, ar.sub("epsilon"));
        ar.finish();
    }
    r.finish();
    return t;
}

StoppingRule parse_stopping(const json& j, const std::string& path) {
    ObjectReader r(j, path);
    StoppingRule s;
    if (const json* v = r.optional("min_errors_per_class")) {
        s.min_errors_per_class = as_u64(*v, r.sub("min_errors_per_class"));
        if (s.min_errors_per_class < 1)
            throw ConfigError(r.sub("min_errors_per_class") + ": must be >= 1");
    }
    if (const json* v = r.optional("max_trials")) {
        s.max_trials = as_u64(*v, r.sub("max_trials"));
        if (s.max_trials < 1) throw ConfigError(r.sub("max_trials") + ": must be >= 1");
    }
    r.finish();
    return s;
}

BaselineSection parse_baseline(const json& j, const std::string& path) {
    ObjectReader r(j, path);
    BaselineSection b;
    b.mode = parse_mode(as_string(r.require("mode"), r.sub("mode")), r.sub("mode"));
    if (is_ae_mode(b.mode)) throw ConfigError(r.sub("mode") + ": must be a baseline mode");
    b.bit_lengths = as_uint_list<unsigned>(r.require("bit_lengths"), r.sub("bit_lengths"));
    if (const json* v = r.optional("num_codes")) {
        b.num_codes = static_cast<std::size_t>(as_u64(*v, r.sub("num_codes")));
        if (b.num_codes < 1) throw ConfigError(r.sub("num_codes") + ": must be >= 1");
    }
    if (b.mode == ExperimentMode::baseline_superposition) {
        if (b.bit_lengths.size() != 2)
            throw ConfigError(r.sub("bit_lengths") + ": superposition needs exactly [k1, k2]");
        b.mu_grid = as_double_list(r.require("mu_grid"), r.sub("mu_grid"));
        for (double mu : b.mu_grid)
            if (!(mu > 0.0 && mu < 1.0))
                throw ConfigError(r.sub("mu_grid") + ": mu values must lie in (0,1)");
        if (const json* v = r.optional("normalization"))
            b.normalization =
                parse_normalization(as_string(*v, r.sub("normalization")), r.sub("normalization"));
    } else {
        r.forbid("mu_grid", "only valid for baseline_superposition");
        r.forbid("normalization", "only valid for baseline_superposition");
    }
    r.finish();
    return b;
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text, const std::string& origin) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        // Map the byte offset to a line number for the diagnostic.
        std::size_t line = 1;
        for (std::size_t i = 0; i < e.byte && i < json_text.size(); ++i)
            if (json_text[i] == '\n') ++line;
        throw ConfigError(origin + ":" + std::to_string(line) + ": " + e.what());
    }

    ObjectReader r(root, origin);
    ExperimentConfig cfg;

    const std::uint64_t sv = as_u64(r.require("schema_version"), r.sub("schema_version"));
    if (sv != 1) throw ConfigError(r.sub("schema_version") + ": unsupported version");
    cfg.schema_version = 1;

    cfg.mode = parse_mode(as_string(r.require("mode"), r.sub("mode")), r.sub("mode"));
    if (const json* v = r.optional("seed")) cfg.seed = as_u64(*v, r.sub("seed"));
    cfg.n = static_cast<std::size_t>(as_u64(r.require("n"), r.sub("n")));
    if (cfg.n < 1) throw ConfigError(r.sub("n") + ": must be >= 1");

    cfg.snr_grid_db = as_double_list(r.require("snr_grid_db"), r.sub("snr_grid_db"));

    if (cfg.mode == ExperimentMode::ae_message_wise) {
        cfg.class_sizes = as_uint_list<std::size_t>(r.require("class_sizes"), r.sub("class_sizes"));
        r.forbid("bit_lengths", "ae_message_wise takes class_sizes");
    } else {
        cfg.bit_lengths = as_uint_list<unsigned>(r.require("bit_lengths"), r.sub("bit_lengths"));
        r.forbid("class_sizes", "only valid for ae_message_wise");
    }

    if (is_ae_mode(cfg.mode)) {
        cfg.lambda_grid = as_double_list(r.require("lambda_grid"), r.sub("lambda_grid"));
        for (double l : cfg.lambda_grid)
            if (!(l >= 0.0 && l <= 1.0))
                throw ConfigError(r.sub("lambda_grid") + ": lambda values must lie in [0,1]");
        if (const json* v = r.optional("train")) cfg.train = parse_train(*v, r.sub("train"));
        if (const json* v = r.optional("bitwise_loss")) {
            const std::string s = as_string(*v, r.sub("bitwise_loss"));
            if (s == "literal")
                cfg.bitwise_form = BitwiseLossForm::literal;
            else if (s == "class_mass")
                cfg.bitwise_form = BitwiseLossForm::class_mass;
            else
                throw ConfigError(r.sub("bitwise_loss") + ": expected 'literal' or 'class_mass'");
        }
        if (const json* v = r.optional("baseline"))
            cfg.baseline = parse_baseline(*v, r.sub("baseline"));
        r.forbid("mu_grid", "only valid for baseline_superposition");
        r.forbid("num_codes", "only valid for baseline modes");
        r.forbid("normalization", "only valid for baseline_superposition");
    } else {
        r.forbid("lambda_grid", "only valid for AE modes");
        r.forbid("train", "only valid for AE modes");
        r.forbid("bitwise_loss", "only valid for AE modes");
        r.forbid("baseline", "only valid inside AE configs");
        if (const json* v = r.optional("num_codes")) {
            cfg.num_codes = static_cast<std::size_t>(as_u64(*v, r.sub("num_codes")));
            if (cfg.num_codes < 1) throw ConfigError(r.sub("num_codes") + ": must be >= 1");
        }
        if (cfg.mode == ExperimentMode::baseline_superposition) {
            if (cfg.bit_lengths.size() != 2)
                throw ConfigError(r.sub("bit_lengths") + ": superposition needs exactly [k1, k2]");
            cfg.mu_grid = as_double_list(r.require("mu_grid"), r.sub("mu_grid"));
            for (double mu : cfg.mu_grid)
                if (!(mu > 0.0 && mu < 1.0))
                    throw ConfigError(r.sub("mu_grid") + ": mu values must lie in (0,1)");
            if (const json* v = r.optional("normalization"))
                cfg.normalization = parse_normalization(as_string(*v, r.sub("normalization")),
                                                        r.sub("normalization"));
        } else {
            r.forbid("mu_grid", "only valid for baseline_superposition");
            r.forbid("normalization", "only valid for baseline_superposition");
        }
    }

    if (const json* v = r.optional("stopping")) cfg.stopping = parse_stopping(*v, r.sub("stopping"));
    if (const json* v = r.optional("output")) cfg.output = as_string(*v, r.sub("output"));
    r.finish();

    cfg.partition().validate();
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config file " + path);
    std::ostringstream buf;
    buf << is.rdbuf();
    return parse_config(buf.str(), path);
}

// ---------------------------------------------------------------------------
// CSV emission and parsing.

namespace {

std::string fmt10(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

std::string fmt_hex(std::uint64_t v) {
    char buf[20];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

CsvRow to_csv_row(const ResultRow& row) {
    CsvRow out;
    out.mode = row.mode;
    out.grid_index = row.grid_index;
    out.param = row.param;
    out.ebn0_db = row.profile.ebn0_db;
    out.avg_error = row.avg_error();
    out.total_trials = row.profile.total_trials;
    out.message_errors = row.profile.message_errors;
    out.ci_limited = row.profile.ci_limited;
    out.seed = row.profile.seed;
    out.code_digest = row.profile.code_digest;
    const std::size_t C = row.profile.classes.size();
    for (std::size_t c = 0; c < C; ++c) {
        out.classes.push_back(row.profile.classes[c]);
        out.p.push_back(row.profile.estimate(c));
        const auto [lo, hi] = row.profile.wilson(c);
        out.lo.push_back(lo);
        out.hi.push_back(hi);
    }
    return out;
}

void write_header(std::size_t C, std::ostream& os) {
    os << "mode,grid_index,lambda,ebn0_db,avg_error,total_trials,message_errors,ci_limited,seed,"
          "code_digest";
    for (std::size_t c = 1; c <= C; ++c)
        os << ",p" << c << ",p" << c << "_lo,p" << c << "_hi,trials" << c << ",errors" << c;
    os << '\n';
}

void write_row(const CsvRow& row, std::ostream& os) {
    os << row.mode << ',' << row.grid_index << ',';
    if (!std::isnan(row.param)) os << fmt10(row.param);
    os << ',' << fmt10(row.ebn0_db) << ',' << fmt10(row.avg_error) << ',' << row.total_trials
       << ',' << row.message_errors << ',' << (row.ci_limited ? 1 : 0) << ',' << row.seed << ','
       << fmt_hex(row.code_digest);
    for (std::size_t c = 0; c < row.classes.size(); ++c)
        os << ',' << fmt10(row.p[c]) << ',' << fmt10(row.lo[c]) << ',' << fmt10(row.hi[c]) << ','
           << row.classes[c].trials << ',' << row.classes[c].errors;
    os << '\n';
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(field);
            field.clear();
        } else {
            field.push_back(ch);
        }
    }
    out.push_back(field);
    return out;
}

}  // namespace

void emit_csv(const std::vector<CsvRow>& rows, std::ostream& os) {
    const std::size_t C = rows.empty() ? 0 : rows.front().classes.size();
    for (const CsvRow& r : rows)
        if (r.classes.size() != C)
            throw std::invalid_argument("emit_csv: rows disagree on class count");
    write_header(C, os);
    for (const CsvRow& r : rows) write_row(r, os);
}

void emit_csv(const std::vector<ResultRow>& rows, std::ostream& os) {
    std::vector<CsvRow> flat;
    flat.reserve(rows.size());
    for (const ResultRow& r : rows) flat.push_back(to_csv_row(r));
    emit_csv(flat, os);
}

std::vector<CsvRow> parse_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw std::runtime_error("csv: missing header");
    const auto header = split_csv_line(line);
    if (header.size() < 10 || header[0] != "mode" || (header.size() - 10) % 5 != 0)
        throw std::runtime_error("csv: unrecognized header");
    const std::size_t C = (header.size() - 10) / 5;

    std::vector<CsvRow> rows;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != header.size()) throw std::runtime_error("csv: ragged row");
        CsvRow r;
        r.mode = f[0];
        r.grid_index = std::stoull(f[1]);
        r.param = f[2].empty() ? std::numeric_limits<double>::quiet_NaN() : std::stod(f[2]);
        r.ebn0_db = std::stod(f[3]);
        r.avg_error = std::stod(f[4]);
        r.total_trials = std::stoull(f[5]);
        r.message_errors = std::stoull(f[6]);
        r.ci_limited = f[7] == "1";
        r.seed = std::stoull(f[8]);
        r.code_digest = std::stoull(f[9], nullptr, 16);
        for (std::size_t c = 0; c < C; ++c) {
            r.p.push_back(std::stod(f[10 + 5 * c]));
            r.lo.push_back(std::stod(f[11 + 5 * c]));
            r.hi.push_back(std::stod(f[12 + 5 * c]));
            ClassCount cc;
            cc.trials = std::stoull(f[13 + 5 * c]);
            cc.errors = std::stoull(f[14 + 5 * c]);
            r.classes.push_back(cc);
        }
        rows.push_back(std::move(r));
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Dominance comparison.

namespace {

bool dominates(const std::pair<double, double>& a, const std::pair<double, double>& b) {
    return a.first <= b.first && a.second <= b.second &&
           (a.first < b.first || a.second < b.second);
}

}  // namespace

DominanceReport compare_frontiers(const std::vector<std::pair<double, double>>& ae_points,
                                  const std::vector<std::pair<double, double>>& baseline_points) {
    DominanceReport report;
    report.ae_frontier = pareto_frontier(ae_points);
    report.baseline_frontier = pareto_frontier(baseline_points);

    report.ae_point_dominated.resize(ae_points.size(), false);
    for (std::size_t i = 0; i < ae_points.size(); ++i)
        for (const auto& q : baseline_points)
            if (dominates(q, ae_points[i])) {
                report.ae_point_dominated[i] = true;
                break;
            }

    report.ae_frontier_dominates_baseline = true;
    for (const auto& q : report.baseline_frontier) {
        bool covered = false;
        for (const auto& p : ae_points)
            if (dominates(p, q)) {
                covered = true;
                break;
            }
        if (!covered) {
            report.ae_frontier_dominates_baseline = false;
            break;
        }
    }
    return report;
}

// ---------------------------------------------------------------------------
// Experiment runner.

namespace {

std::string utc_timestamp() {
    std::time_t now = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    return buf;
}

std::vector<double> lambda_vector(double lam, std::size_t C) {
    if (C == 1) return {1.0};
    std::vector<double> v(C, (1.0 - lam) / static_cast<double>(C - 1));
    v[0] = lam;
    return v;
}

json config_echo(const ExperimentConfig& cfg) {
    json j;
    j["schema_version"] = cfg.schema_version;
    j["mode"] = to_string(cfg.mode);
    j["seed"] = cfg.seed;
    j["n"] = cfg.n;
    if (!cfg.class_sizes.empty()) j["class_sizes"] = cfg.class_sizes;
    if (!cfg.bit_lengths.empty()) j["bit_lengths"] = cfg.bit_lengths;
    if (!cfg.lambda_grid.empty()) j["lambda_grid"] = cfg.lambda_grid;
    if (!cfg.mu_grid.empty()) j["mu_grid"] = cfg.mu_grid;
    j["snr_grid_db"] = cfg.snr_grid_db;
    if (is_ae_mode(cfg.mode)) {
        j["train"] = {{"ebn0_db", cfg.train.ebn0_db},
                      {"batch_size", cfg.train.batch_size},
                      {"num_iterations", cfg.train.num_iterations},
                      {"encoder_hidden", cfg.train.encoder_hidden},
                      {"decoder_hidden", cfg.train.decoder_hidden},
                      {"adam",
                       {{"alpha", cfg.train.adam.alpha},
                        {"beta1", cfg.train.adam.beta1},
                        {"beta2", cfg.train.adam.beta2},
                        {"epsilon", cfg.train.adam.epsilon}}}};
        j["bitwise_loss"] =
            cfg.bitwise_form == BitwiseLossForm::literal ? "literal" : "class_mass";
    } else {
        j["num_codes"] = cfg.num_codes;
        if (cfg.mode == ExperimentMode::baseline_superposition)
            j["normalization"] =
                cfg.normalization == SuperpositionSpec::Normalization::per_codeword
                    ? "per_codeword"
                    : "codebook_average";
    }
    if (cfg.baseline) {
        json b;
        b["mode"] = to_string(cfg.baseline->mode);
        b["bit_lengths"] = cfg.baseline->bit_lengths;
        b["num_codes"] = cfg.baseline->num_codes;
        if (!cfg.baseline->mu_grid.empty()) b["mu_grid"] = cfg.baseline->mu_grid;
        if (cfg.baseline->mode == ExperimentMode::baseline_superposition)
            b["normalization"] =
                cfg.baseline->normalization == SuperpositionSpec::Normalization::per_codeword
                    ? "per_codeword"
                    : "codebook_average";
        j["baseline"] = b;
    }
    j["stopping"] = {{"min_errors_per_class", cfg.stopping.min_errors_per_class},
                     {"max_trials", cfg.stopping.max_trials}};
    j["output"] = cfg.output;
    return j;
}

json rows_to_json(const std::vector<ResultRow>& rows) {
    json out = json::array();
    for (const ResultRow& r : rows) {
        json j;
        j["mode"] = r.mode;
        j["grid_index"] = r.grid_index;
        if (std::isnan(r.param))
            j["lambda"] = nullptr;
        else
            j["lambda"] = r.param;
        j["ebn0_db"] = r.profile.ebn0_db;
        j["sigma2"] = r.profile.sigma2;
        j["avg_error"] = r.avg_error();
        j["total_trials"] = r.profile.total_trials;
        j["message_errors"] = r.profile.message_errors;
        j["ci_limited"] = r.profile.ci_limited;
        j["seed"] = r.profile.seed;
        j["code_digest"] = fmt_hex(r.profile.code_digest);
        json classes = json::array();
        for (std::size_t c = 0; c < r.profile.classes.size(); ++c) {
            const auto [lo, hi] = r.profile.wilson(c);
            classes.push_back({{"trials", r.profile.classes[c].trials},
                               {"errors", r.profile.classes[c].errors},
                               {"estimate", r.profile.estimate(c)},
                               {"wilson_lo", lo},
                               {"wilson_hi", hi}});
        }
        j["classes"] = classes;
        out.push_back(j);
    }
    return out;
}

struct AeGridOutput {
    std::vector<ResultRow> rows;
    std::vector<Vec> loss_traces;  // per grid point
};

AeGridOutput run_ae_grid(const ExperimentConfig& cfg, std::uint64_t master,
                         const std::string& out_dir, Execution exec) {
    const ClassPartition partition = cfg.partition();
    const std::size_t C = partition.num_classes();
    const std::size_t L = cfg.lambda_grid.size();
    const std::size_t S = cfg.snr_grid_db.size();

    AeGridOutput out;
    out.rows.resize(L * S);
    out.loss_traces.resize(L);
    std::vector<std::exception_ptr> failures(L);

    auto run_point = [&](std::size_t i) {
        try {
            TrainConfig tc;
            tc.partition = partition;
            tc.n = cfg.n;
            tc.weights.lambdas = lambda_vector(cfg.lambda_grid[i], C);
            tc.bitwise_form = cfg.bitwise_form;
            tc.encoder_hidden = cfg.train.encoder_hidden;
            tc.decoder_hidden = cfg.train.decoder_hidden;
            tc.train_ebn0_db = cfg.train.ebn0_db;
            tc.batch_size = cfg.train.batch_size;
            tc.num_iterations = cfg.train.num_iterations;
            tc.adam = cfg.train.adam;
            tc.seed = derive_seed(master, "train", i);

            TrainResult tr = train(tc);
            Codebook cb = export_codebook(tr.params, tc);
            save_codebook(cb, out_dir + "/codebooks/" + to_string(cfg.mode) + "_" +
                                  std::to_string(i) + ".txt");
            save_model(tr.params, tc.digest(),
                       out_dir + "/models/" + to_string(cfg.mode) + "_" + std::to_string(i) +
                           ".txt");

            NnDecoder decoder(tr.params);
            for (std::size_t j = 0; j < S; ++j) {
                const SnrSpec snr{cfg.snr_grid_db[j], tc.rate()};
                ErrorProfile profile =
                    estimate_profile(cb, decoder, partition, snr, cfg.stopping,
                                     derive_seed(master, "eval", i * S + j), exec);
                profile.param = cfg.lambda_grid[i];
                ResultRow row;
                row.mode = to_string(cfg.mode);
                row.grid_index = i;
                row.param = cfg.lambda_grid[i];
                row.profile = std::move(profile);
                row.partition = partition;
                out.rows[i * S + j] = std::move(row);
            }
            out.loss_traces[i] = std::move(tr.loss_trace);
        } catch (...) {
            failures[i] = std::current_exception();
        }
    };

    if (L > 1 && exec == Execution::openmp) {
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
        for (std::int64_t i = 0; i < static_cast<std::int64_t>(L); ++i)
            run_point(static_cast<std::size_t>(i));
#else
        for (std::size_t i = 0; i < L; ++i) run_point(i);
#endif
    } else {
        for (std::size_t i = 0; i < L; ++i) run_point(i);
    }

    for (const auto& f : failures)
        if (f) std::rethrow_exception(f);
    return out;
}

std::vector<ResultRow> run_baseline_grid(const ExperimentMode mode,
                                         const std::vector<unsigned>& bit_lengths,
                                         std::size_t num_codes,
                                         const std::vector<double>& mu_grid,
                                         SuperpositionSpec::Normalization normalization,
                                         const ExperimentConfig& cfg, std::uint64_t master,
                                         const std::string& out_dir, Execution exec) {
    const std::size_t S = cfg.snr_grid_db.size();
    const bool superpos = mode == ExperimentMode::baseline_superposition;
    const std::size_t U = superpos ? mu_grid.size() : 1;
    const std::size_t total = U * num_codes;

    std::vector<ResultRow> rows(total * S);
    std::vector<std::exception_ptr> failures(total);

    auto run_code = [&](std::size_t idx) {
        try {
            const std::size_t u = idx / num_codes;
            Rng gen(derive_seed(master, "baseline-code", idx));
            Codebook code;
            if (superpos) {
                SuperpositionSpec spec;
                spec.k1 = bit_lengths[0];
                spec.k2 = bit_lengths[1];
                spec.n = cfg.n;
                spec.mu = mu_grid[u];
                spec.normalization = normalization;
                code = gen_superposition_code(spec, gen);
            } else {
                CosetSpec spec;
                spec.class_bits = bit_lengths;
                spec.n = cfg.n;
                code = gen_coset_code(spec, gen);
            }
            if (idx < 8)  // keep exports bounded for large ensembles
                save_codebook(code, out_dir + "/codebooks/" + to_string(mode) + "_" +
                                        std::to_string(idx) + ".txt");

            MlDecoder decoder(code);
            for (std::size_t j = 0; j < S; ++j) {
                const SnrSpec snr{cfg.snr_grid_db[j], code.rate()};
                ErrorProfile profile = estimate_profile(
                    code, decoder, code.partition, snr, cfg.stopping,
                    derive_seed(master, "baseline-eval", idx * S + j), Execution::serial_reference);
                if (superpos) profile.param = mu_grid[u];
                ResultRow row;
                row.mode = to_string(mode);
                row.grid_index = idx;
                row.param = superpos ? mu_grid[u] : std::numeric_limits<double>::quiet_NaN();
                row.profile = std::move(profile);
                row.partition = code.partition;
                rows[idx * S + j] = std::move(row);
            }
        } catch (...) {
            failures[idx] = std::current_exception();
        }
    };

    if (exec == Execution::openmp) {
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
        for (std::int64_t i = 0; i < static_cast<std::int64_t>(total); ++i)
            run_code(static_cast<std::size_t>(i));
#else
        for (std::size_t i = 0; i < total; ++i) run_code(i);
#endif
    } else {
        for (std::size_t i = 0; i < total; ++i) run_code(i);
    }

    for (const auto& f : failures)
        if (f) std::rethrow_exception(f);
    return rows;
}

json dominance_to_json(const ExperimentConfig& cfg, const std::vector<ResultRow>& ae_rows,
                       const std::vector<ResultRow>& baseline_rows) {
    json reports = json::array();
    for (double snr : cfg.snr_grid_db) {
        std::vector<std::pair<double, double>> ae_pts, base_pts;
        for (const ResultRow& r : ae_rows)
            if (r.profile.ebn0_db == snr && r.profile.classes.size() >= 2)
                ae_pts.emplace_back(r.profile.estimate(0), r.profile.estimate(1));
        for (const ResultRow& r : baseline_rows)
            if (r.profile.ebn0_db == snr && r.profile.classes.size() >= 2)
                base_pts.emplace_back(r.profile.estimate(0), r.profile.estimate(1));
        DominanceReport rep = compare_frontiers(ae_pts, base_pts);
        json j;
        j["ebn0_db"] = snr;
        j["ae_points"] = ae_pts;
        j["baseline_points"] = base_pts.size();
        j["ae_point_dominated"] = rep.ae_point_dominated;
        j["ae_frontier_dominates_baseline"] = rep.ae_frontier_dominates_baseline;
        reports.push_back(j);
    }
    return reports;
}

}  // namespace

RunOutput run_experiment(const ExperimentConfig& cfg, const RunOptions& options) {
    const std::uint64_t master = options.seed.value_or(cfg.seed);
    const std::string out_dir = options.out_dir.empty() ? cfg.output : options.out_dir;
#ifdef _OPENMP
    if (options.jobs > 0) omp_set_num_threads(options.jobs);
#endif

    fs::create_directories(out_dir + "/codebooks");
    const std::string started = utc_timestamp();

    std::vector<ResultRow> rows;
    std::vector<Vec> loss_traces;
    json report;

    if (is_ae_mode(cfg.mode)) {
        fs::create_directories(out_dir + "/models");
        AeGridOutput ae = run_ae_grid(cfg, master, out_dir, options.exec);
        loss_traces = std::move(ae.loss_traces);
        rows = std::move(ae.rows);
        if (cfg.baseline) {
            std::vector<ResultRow> brows = run_baseline_grid(
                cfg.baseline->mode, cfg.baseline->bit_lengths, cfg.baseline->num_codes,
                cfg.baseline->mu_grid, cfg.baseline->normalization, cfg, master, out_dir,
                options.exec);
            report = dominance_to_json(cfg, rows, brows);
            rows.insert(rows.end(), std::make_move_iterator(brows.begin()),
                        std::make_move_iterator(brows.end()));
        }
    } else {
        rows = run_baseline_grid(cfg.mode, cfg.bit_lengths, cfg.num_codes, cfg.mu_grid,
                                 cfg.normalization, cfg, master, out_dir, options.exec);
    }

    {
        std::ofstream os(out_dir + "/results.csv");
        if (!os) throw std::runtime_error("cannot write " + out_dir + "/results.csv");
        emit_csv(rows, os);
    }
    {
        json j;
        j["schema_version"] = 1;
        j["rows"] = rows_to_json(rows);
        std::ofstream os(out_dir + "/results.json");
        os << j.dump(2) << '\n';
    }
    if (!loss_traces.empty()) {
        std::ofstream os(out_dir + "/loss_trace.csv");
        os << "grid_index,iteration,loss\n";
        for (std::size_t i = 0; i < loss_traces.size(); ++i)
            for (std::size_t t = 0; t < loss_traces[i].size(); ++t)
                os << i << ',' << t << ',' << fmt10(loss_traces[i][t]) << '\n';
    }
    if (!report.is_null()) {
        std::ofstream os(out_dir + "/report.json");
        os << report.dump(2) << '\n';
    }
    {
        json manifest;
        manifest["tool"] = "uepsim";
        manifest["version"] = "1.0.0";
        manifest["master_seed"] = master;
        manifest["jobs"] = options.jobs;
        manifest["out_dir"] = out_dir;
        manifest["row_count"] = rows.size();
        manifest["config"] = config_echo(cfg);
        manifest["started_at"] = started;
        manifest["finished_at"] = utc_timestamp();
        std::ofstream os(out_dir + "/manifest.json");
        os << manifest.dump(2) << '\n';
    }

    return RunOutput{std::move(rows), out_dir};
}

}  // namespace uep
