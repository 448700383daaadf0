#include "speckle/config.hpp"

#include <openssl/evp.h>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

#include <json.hpp>

namespace spk {

using json = nlohmann::json;

ParseError::ParseError(const std::string& msg, int l, int c)
    : Error(msg + " at line " + std::to_string(l) + ", column " + std::to_string(c)), line(l), column(c) {}

namespace {

std::string join_violations(const std::vector<SchemaViolation>& v) {
    std::string s = std::to_string(v.size()) + " schema violation(s):";
    for (const auto& x : v) s += "\n  " + x.field + ": " + x.constraint;
    return s;
}

// Walks one object, records every problem instead of stopping at the first.
class Section {
public:
    Section(const json& root, const std::string& name, std::vector<SchemaViolation>& out, bool required)
        : path_(name), out_(out) {
        if (!root.contains(name)) {
            if (required) out_.push_back({name, "required section missing"});
            present_ = false;
            return;
        }
        obj_ = &root.at(name);
        if (!obj_->is_object()) {
            out_.push_back({name, "must be an object"});
            obj_ = nullptr;
            present_ = false;
        }
    }

    bool present() const { return present_; }
    bool has(const std::string& k) const { return obj_ && obj_->contains(k); }

    double number(const std::string& k, std::optional<double> def, bool positive, bool nonneg = false) {
        seen_.insert(k);
        if (!has(k)) {
            if (!def) {
                if (present_) out_.push_back({field(k), "required"});
                return std::nan("");
            }
            return *def;
        }
        const json& v = obj_->at(k);
        if (!v.is_number()) {
            out_.push_back({field(k), "must be a number"});
            return std::nan("");
        }
        const double x = v.get<double>();
        if (!std::isfinite(x)) out_.push_back({field(k), "must be finite"});
        if (positive && !(x > 0.0)) out_.push_back({field(k), "must be > 0"});
        if (nonneg && !(x >= 0.0)) out_.push_back({field(k), "must be >= 0"});
        return x;
    }

    std::int64_t integer(const std::string& k, std::optional<std::int64_t> def, std::int64_t min) {
        seen_.insert(k);
        if (!has(k)) {
            if (!def) {
                if (present_) out_.push_back({field(k), "required"});
                return min;
            }
            return *def;
        }
        const json& v = obj_->at(k);
        if (!v.is_number_integer()) {
            out_.push_back({field(k), "must be an integer"});
            return min;
        }
        const std::int64_t x = v.get<std::int64_t>();
        if (x < min) out_.push_back({field(k), "must be >= " + std::to_string(min)});
        return x;
    }

    std::uint64_t unsigned_integer(const std::string& k, std::uint64_t def) {
        seen_.insert(k);
        if (!has(k)) return def;
        const json& v = obj_->at(k);
        if (!v.is_number_unsigned()) {
            out_.push_back({field(k), "must be a non-negative integer"});
            return def;
        }
        return v.get<std::uint64_t>();
    }

    bool boolean(const std::string& k, bool def) {
        seen_.insert(k);
        if (!has(k)) return def;
        const json& v = obj_->at(k);
        if (!v.is_boolean()) {
            out_.push_back({field(k), "must be true or false"});
            return def;
        }
        return v.get<bool>();
    }

    std::string choice(const std::string& k, const std::string& def, const std::set<std::string>& allowed) {
        seen_.insert(k);
        if (!has(k)) return def;
        const json& v = obj_->at(k);
        if (!v.is_string() || !allowed.count(v.get<std::string>())) {
            std::string opts;
            for (const auto& a : allowed) opts += (opts.empty() ? "" : "|") + a;
            out_.push_back({field(k), "must be one of " + opts});
            return def;
        }
        return v.get<std::string>();
    }

    std::string string(const std::string& k, const std::string& def) {
        seen_.insert(k);
        if (!has(k)) return def;
        const json& v = obj_->at(k);
        if (!v.is_string() || v.get<std::string>().empty()) {
            out_.push_back({field(k), "must be a non-empty string"});
            return def;
        }
        return v.get<std::string>();
    }

    std::vector<double> numbers(const std::string& k, std::vector<double> def, std::size_t min_len = 0) {
        seen_.insert(k);
        if (!has(k)) return def;
        const json& v = obj_->at(k);
        std::vector<double> out;
        if (!v.is_array()) {
            out_.push_back({field(k), "must be an array of numbers"});
            return def;
        }
        for (const auto& e : v) {
            if (!e.is_number()) {
                out_.push_back({field(k), "must be an array of numbers"});
                return def;
            }
            out.push_back(e.get<double>());
        }
        if (out.size() < min_len) out_.push_back({field(k), "needs at least " + std::to_string(min_len) + " entries"});
        return out;
    }

    std::vector<std::string> strings(const std::string& k, std::vector<std::string> def,
                                     const std::set<std::string>& allowed) {
        seen_.insert(k);
        if (!has(k)) return def;
        const json& v = obj_->at(k);
        std::vector<std::string> out;
        bool ok = v.is_array();
        if (ok)
            for (const auto& e : v) {
                if (!e.is_string() || !allowed.count(e.get<std::string>())) {
                    ok = false;
                    break;
                }
                out.push_back(e.get<std::string>());
            }
        if (!ok) {
            std::string opts;
            for (const auto& a : allowed) opts += (opts.empty() ? "" : "|") + a;
            out_.push_back({field(k), "must be an array drawn from " + opts});
            return def;
        }
        return out;
    }

    // flags keys the schema does not know
    void finish() {
        if (!obj_) return;
        for (const auto& [k, v] : obj_->items())
            if (!seen_.count(k)) out_.push_back({field(k), "unknown field"});
    }

    std::string field(const std::string& k) const { return path_ + "." + k; }

private:
    std::string path_;
    std::vector<SchemaViolation>& out_;
    const json* obj_ = nullptr;
    bool present_ = true;
    std::set<std::string> seen_;
};

std::pair<int, int> line_col(const std::string& text, std::size_t byte) {
    int line = 1, col = 1;
    const std::size_t end = std::min(text.size(), byte > 0 ? byte - 1 : 0);
    for (std::size_t i = 0; i < end; ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return {line, col};
}

}  // namespace

SchemaError::SchemaError(std::vector<SchemaViolation> v) : Error(join_violations(v)), violations(std::move(v)) {}

std::string sha256_hex(const std::string& bytes) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr);
    std::ostringstream s;
    for (unsigned int i = 0; i < len; ++i) s << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
    return s.str();
}

std::string sha256_file(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot read " + path);
    std::ostringstream ss;
    ss << is.rdbuf();
    return sha256_hex(ss.str());
}

ExperimentConfig parse_config_text(const std::string& text) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::parse_error& e) {
        const auto [l, c] = line_col(text, e.byte);
        throw ParseError(e.what(), l, c);
    }
    std::vector<SchemaViolation> v;
    if (!root.is_object()) throw SchemaError(std::vector<SchemaViolation>{{"(root)", "must be an object"}});
    const std::set<std::string> known = {"medium", "beam", "trm", "geometry", "mode", "mc", "output", "numerics",
                                         "moments"};
    for (const auto& [k, val] : root.items())
        if (!known.count(k)) v.push_back({k, "unknown section"});

    ExperimentConfig cfg;
    TimeReversalConfig& tr = cfg.tr;

    Section med(root, "medium", v, true);
    const std::string family = med.choice("family", "gaussian", {"gaussian", "tabulated"});
    const double lc = med.number("lc", std::nullopt, true);
    if (family == "gaussian") {
        const double c0 = med.number("c0", std::nullopt, true);
        tr.medium = MediumModel::gaussian(c0, lc);
    } else {
        auto ks = med.numbers("table_k", {}, 2);
        auto cs = med.numbers("table_chat", {}, 2);
        if (ks.size() != cs.size()) v.push_back({"medium.table_chat", "must have the same length as table_k"});
        tr.medium.family = CovarianceFamily::Tabulated;
        tr.medium.lc = lc;
        tr.medium.table_k = ks;
        tr.medium.table_chat = cs;
    }
    med.finish();

    Section beam(root, "beam", v, true);
    tr.omega0 = beam.number("omega0", std::nullopt, true);
    tr.c_speed = beam.number("c0", 1.0, true);
    beam.finish();

    Section trm(root, "trm", v, true);
    tr.trm.big_r_m = trm.number("big_r_m", std::nullopt, true);
    tr.trm.rho0 = trm.number("rho0", std::nullopt, true);
    trm.finish();

    Section geo(root, "geometry", v, true);
    tr.big_l = geo.number("L", std::nullopt, true);
    tr.grid.n = static_cast<int>(geo.integer("n", std::nullopt, 8));
    tr.grid.extent = geo.number("extent", std::nullopt, true);
    const bool slabs_given = geo.has("n_slabs");
    const int n_slabs = static_cast<int>(geo.integer("n_slabs", 0, slabs_given ? 1 : 0));
    const auto y = geo.numbers("source", {0.0, 0.0});
    if (y.size() != 2) v.push_back({"geometry.source", "must have two entries"});
    else tr.source = {y[0], y[1]};
    geo.finish();
    if (tr.grid.n % 2 != 0) v.push_back({"geometry.n", "must be even"});

    Section mode(root, "mode", v, true);
    const std::string kind = mode.choice("kind", "harmonic", {"harmonic", "broadband"});
    if (kind == "harmonic") {
        tr.mode = TrMode::Harmonic;
        if (mode.has("offsets") && mode.has("omega_offset"))
            v.push_back({"mode.offsets", "give either omega_offset or offsets, not both"});
        if (mode.has("offsets")) {
            cfg.mode = ModeKind::Sweep;
            cfg.offsets = mode.numbers("offsets", {}, 1);
            if (!std::is_sorted(cfg.offsets.begin(), cfg.offsets.end()) ||
                std::find(cfg.offsets.begin(), cfg.offsets.end(), 0.0) == cfg.offsets.end())
                v.push_back({"mode.offsets", "must be sorted and contain 0"});
        } else {
            tr.omega_offset = mode.number("omega_offset", 0.0, false, true);
        }
    } else {
        cfg.mode = ModeKind::Broadband;
        tr.mode = TrMode::Broadband;
        tr.bandwidth = mode.number("bandwidth", std::nullopt, false, true);
        tr.n_freq = static_cast<int>(mode.integer("n_freq", 1, 1));
    }
    mode.finish();

    Section mc(root, "mc", v, true);
    tr.n_realizations = static_cast<int>(mc.integer("n_realizations", std::nullopt, 1));
    tr.master_seed = mc.unsigned_integer("master_seed", 0);
    mc.finish();

    Section out(root, "output", v, false);
    cfg.output_dir = out.string("directory", "out");
    cfg.formats = out.strings("formats", {"csv"}, {"csv", "spkl"});
    out.finish();

    Section num(root, "numerics", v, false);
    tr.source_sigma = num.number("source_sigma", 0.0, false, true);
    tr.spectral_source = num.boolean("spectral_source", false);
    tr.absorber_fraction = num.number("absorber_fraction", 0.0, false, true);
    if (tr.absorber_fraction >= 0.5) v.push_back({"numerics.absorber_fraction", "must be < 0.5"});
    tr.check_leak = num.boolean("check_leak", true);
    tr.full_map = num.boolean("full_map", false);
    num.finish();

    Section mom(root, "moments", v, false);
    cfg.moments.psi_s_max = mom.number("psi_s_max", 5.0, true);
    cfg.moments.psi_points = static_cast<int>(mom.integer("psi_points", 101, 2));
    cfg.moments.a_r = mom.numbers("a_r", {1.0}, 1);
    cfg.moments.rho_ratios = mom.numbers("rho_ratios", {1.0, 10.0, 100.0}, 1);
    for (double a : cfg.moments.a_r)
        if (!(a > 0.0)) v.push_back({"moments.a_r", "entries must be > 0"});
    for (double r : cfg.moments.rho_ratios)
        if (!(r >= 1.0)) v.push_back({"moments.rho_ratios", "entries (r0/rho0)^2 must be >= 1"});
    cfg.moments.b_max = mom.number("b_max", 100.0, true);
    cfg.moments.b_points = static_cast<int>(mom.integer("b_points", 101, 2));
    mom.finish();

    if (!v.empty()) throw SchemaError(v);

    // derived checks, only meaningful once the basic fields are sane
    const double h = tr.grid.spacing();
    if (h > 0.5 * tr.medium.lc)
        v.push_back({"geometry.extent", "GridTooCoarse: spacing " + std::to_string(h) + " exceeds lc/2"});
    if (tr.trm.rho0 < 2.0 * h * (1.0 - 1e-12))
        v.push_back({"trm.rho0", "GridTooCoarse: rho0 must be >= 2 grid spacings"});
    if (cfg.mode == ModeKind::Sweep) {
        double widest = 0.0;
        for (double o : cfg.offsets) widest = std::max(widest, std::abs(o));
        tr.omega_offset = widest;  // plan is checked at the highest frequency
    }
    try {
        tr.medium.validate();
        if (slabs_given) {
            tr.plan = PropagationPlan{tr.big_l, n_slabs};
        } else {
            tr.plan = PropagationPlan::for_distance(tr.big_l, tr.medium, tr.grid, tr.max_frequency(), tr.c_speed);
            cfg.n_slabs_defaulted = true;
        }
        tr.plan.validate(tr.medium, tr.grid, tr.max_frequency(), tr.c_speed);
    } catch (const std::exception& e) {
        v.push_back({"geometry.n_slabs", e.what()});
    }
    if (v.empty()) {
        try {
            tr.validate();
        } catch (const Error& e) {
            v.push_back({"(config)", std::string(e.kind()) + ": " + e.what()});
        } catch (const std::exception& e) {
            v.push_back({"(config)", e.what()});
        }
    }
    if (cfg.mode == ModeKind::Sweep) tr.omega_offset = 0.0;
    if (!v.empty()) throw SchemaError(v);

    cfg.canonical = root.dump();
    cfg.hash = sha256_hex(cfg.canonical);
    return cfg;
}

void override_seed(ExperimentConfig& cfg, std::uint64_t seed) {
    json root = json::parse(cfg.canonical);
    root["mc"]["master_seed"] = seed;
    cfg.tr.master_seed = seed;
    cfg.canonical = root.dump();
    cfg.hash = sha256_hex(cfg.canonical);
}

ExperimentConfig parse_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot open config " + path);
    std::ostringstream ss;
    ss << is.rdbuf();
    return parse_config_text(ss.str());
}

}  // namespace spk
