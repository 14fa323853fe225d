#include "qlab/config.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <random>

#include "qlab/ccr.hpp"

namespace qlab::cli {

namespace fs = std::filesystem;

std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_file_atomic(const std::string& path, const std::string& content) {
    const fs::path target(path);
    const fs::path tmp = target.parent_path() / (target.filename().string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + tmp.string());
        out << content;
    }
    fs::rename(tmp, target);
}

CMat parse_matrix(const json& j, const std::string& context) {
    if (!j.is_array() || j.empty())
        throw ConfigError(context + ": matrix must be a non-empty array of rows");
    const int d = static_cast<int>(j.size());
    CMat m(d);
    for (int r = 0; r < d; ++r) {
        if (!j[r].is_array() || static_cast<int>(j[r].size()) != d)
            throw ConfigError(context + ": matrix must be square (row " + std::to_string(r) + ")");
        for (int c = 0; c < d; ++c) {
            const auto& cell = j[r][c];
            if (!cell.is_array() || cell.size() != 2 || !cell[0].is_number() ||
                !cell[1].is_number())
                throw ConfigError(context + ": entries must be [re, im] pairs");
            m(r, c) = cplx(cell[0].get<double>(), cell[1].get<double>());
        }
    }
    return m;
}

json matrix_to_json(const CMat& m) {
    json rows = json::array();
    for (int r = 0; r < m.dim(); ++r) {
        json row = json::array();
        for (int c = 0; c < m.dim(); ++c)
            row.push_back(json::array({m(r, c).real(), m(r, c).imag()}));
        rows.push_back(std::move(row));
    }
    return rows;
}

namespace {

void require_keys(const json& j, const std::string& ctx, std::initializer_list<const char*> req,
                  std::initializer_list<const char*> opt) {
    for (const char* k : req)
        if (!j.contains(k)) throw ConfigError(ctx + ": missing key '" + k + "'");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (const char* k : req) known = known || it.key() == k;
        for (const char* k : opt) known = known || it.key() == k;
        if (!known) throw ConfigError(ctx + ": unknown key '" + it.key() + "'");
    }
}

std::vector<double> parse_vector(const json& j, const std::string& ctx) {
    if (!j.is_array()) throw ConfigError(ctx + ": expected an array of numbers");
    std::vector<double> v;
    for (const auto& x : j) {
        if (!x.is_number()) throw ConfigError(ctx + ": expected numbers");
        v.push_back(x.get<double>());
    }
    return v;
}

std::shared_ptr<const Family> parse_family(const std::string& name, const json& j) {
    const std::string ctx = "families." + name;
    if (!j.is_object() || !j.contains("type")) throw ConfigError(ctx + ": missing 'type'");
    const std::string type = j["type"].get<std::string>();
    try {
        if (type == "qubit") {
            require_keys(j, ctx, {"type", "r"}, {});
            return std::make_shared<QubitFamily>(j["r"].get<double>());
        }
        if (type == "diagonal") {
            require_keys(j, ctx, {"type", "probs", "derivatives"}, {});
            std::vector<std::vector<double>> derivs;
            for (const auto& row : j["derivatives"])
                derivs.push_back(parse_vector(row, ctx + ".derivatives"));
            return std::make_shared<DiagonalFamily>(parse_vector(j["probs"], ctx + ".probs"),
                                                    std::move(derivs));
        }
        if (type == "rotation") {
            require_keys(j, ctx, {"type", "rho", "generators"}, {});
            std::vector<CMat> gens;
            for (const auto& g : j["generators"])
                gens.push_back(parse_matrix(g, ctx + ".generators"));
            return std::make_shared<RotationFamily>(
                DensityMatrix(parse_matrix(j["rho"], ctx + ".rho")), std::move(gens));
        }
        if (type == "linear") {
            require_keys(j, ctx, {"type", "rho", "deltas"}, {});
            std::vector<CMat> deltas;
            for (const auto& g : j["deltas"]) deltas.push_back(parse_matrix(g, ctx + ".deltas"));
            return std::make_shared<LinearMatrixFamily>(
                DensityMatrix(parse_matrix(j["rho"], ctx + ".rho")), std::move(deltas));
        }
    } catch (const std::invalid_argument& e) {
        throw ConfigError(ctx + ": " + e.what());
    }
    throw ConfigError(ctx + ": unknown family type '" + type + "'");
}

json family_to_json(const Family& f) {
    json out;
    if (const auto* q = dynamic_cast<const QubitFamily*>(&f)) {
        out["type"] = "qubit";
        out["r"] = q->r();
        return out;
    }
    if (const auto* d = dynamic_cast<const DiagonalFamily*>(&f)) {
        out["type"] = "diagonal";
        out["probs"] = d->base_probs();
        out["derivatives"] = d->derivs();
        return out;
    }
    // rotation / linear families round-trip through their matrix tables
    if (const auto* r = dynamic_cast<const RotationFamily*>(&f)) {
        out["type"] = "rotation";
        out["rho"] = matrix_to_json(r->state(r->theta0()).matrix());
        json gens = json::array();
        for (const auto& g : r->generators_at_base()) gens.push_back(matrix_to_json(g));
        out["generators"] = std::move(gens);
        return out;
    }
    const auto* l = dynamic_cast<const LinearMatrixFamily*>(&f);
    if (!l) throw std::logic_error("family_to_json: unknown family kind");
    out["type"] = "linear";
    out["rho"] = matrix_to_json(l->state(l->theta0()).matrix());
    json deltas = json::array();
    for (const auto& d : l->state_derivs_at_base()) deltas.push_back(matrix_to_json(d));
    out["deltas"] = std::move(deltas);
    return out;
}

std::vector<std::string> parse_labels(const json& j, const std::string& ctx) {
    std::vector<std::string> labels;
    for (const auto& x : j) {
        if (!x.is_string()) throw ConfigError(ctx + ": labels must be strings");
        labels.push_back(x.get<std::string>());
    }
    return labels;
}

void check_job_name(const std::string& name) {
    if (name.empty()) throw ConfigError("jobs: empty job name");
    for (char c : name)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_')
            throw ConfigError("jobs." + name + ": names are restricted to [A-Za-z0-9_-]");
}

const std::vector<std::string>& known_commands() {
    static const std::vector<std::string> cmds{"hellinger",       "canonical-measure",
                                               "deficiency",      "cocycle",
                                               "canonical-state", "suff-check",
                                               "lan-verify",      "qubit-demo"};
    return cmds;
}

}  // namespace

RunConfig parse_config(const json& doc) {
    if (!doc.is_object()) throw ConfigError("config: top level must be an object");
    for (auto it = doc.begin(); it != doc.end(); ++it) {
        const std::string& k = it.key();
        if (k != "families" && k != "experiments" && k != "jobs" && k != "tolerances" &&
            k != "output")
            throw ConfigError("config: unknown key '" + k + "'");
    }

    RunConfig cfg;
    json norm;

    if (doc.contains("families")) {
        json fams;
        for (auto it = doc["families"].begin(); it != doc["families"].end(); ++it) {
            cfg.families.emplace(it.key(), parse_family(it.key(), it.value()));
            fams[it.key()] = family_to_json(*cfg.families.at(it.key()));
        }
        if (!cfg.families.empty()) norm["families"] = std::move(fams);
    }

    if (doc.contains("experiments")) {
        const json& ex = doc["experiments"];
        require_keys(ex, "experiments", {}, {"classical", "quantum"});
        json nex;
        if (ex.contains("classical")) {
            json ncl;
            for (auto it = ex["classical"].begin(); it != ex["classical"].end(); ++it) {
                const std::string ctx = "experiments.classical." + it.key();
                const json& e = it.value();
                require_keys(e, ctx, {"params", "probs"}, {"unrestricted"});
                std::vector<std::vector<double>> rows;
                for (const auto& row : e["probs"]) rows.push_back(parse_vector(row, ctx));
                const bool unrestricted = e.value("unrestricted", false);
                try {
                    auto labels = parse_labels(e["params"], ctx);
                    cfg.classical_experiments.emplace(
                        it.key(), unrestricted
                                      ? classical::Experiment::unrestricted(labels, rows)
                                      : classical::Experiment(labels, rows));
                } catch (const std::invalid_argument& err) {
                    throw ConfigError(ctx + ": " + err.what());
                }
                json ne;
                ne["params"] = e["params"];
                ne["probs"] = e["probs"];
                if (unrestricted) ne["unrestricted"] = true;
                ncl[it.key()] = std::move(ne);
            }
            nex["classical"] = std::move(ncl);
        }
        if (ex.contains("quantum")) {
            json nq;
            for (auto it = ex["quantum"].begin(); it != ex["quantum"].end(); ++it) {
                const std::string ctx = "experiments.quantum." + it.key();
                const json& e = it.value();
                require_keys(e, ctx, {"params", "states"}, {"base"});
                auto labels = parse_labels(e["params"], ctx);
                std::vector<DensityMatrix> states;
                try {
                    for (const auto& s : e["states"])
                        states.emplace_back(parse_matrix(s, ctx + ".states"));
                    const int base = e.value("base", 0);
                    cfg.quantum_experiments.emplace(
                        it.key(), quantum::Experiment(labels, std::move(states), base));
                } catch (const std::invalid_argument& err) {
                    throw ConfigError(ctx + ": " + err.what());
                }
                json ne;
                ne["params"] = e["params"];
                ne["base"] = e.value("base", 0);
                ne["states"] = e["states"];
                nq[it.key()] = std::move(ne);
            }
            nex["quantum"] = std::move(nq);
        }
        if (!nex.empty()) norm["experiments"] = std::move(nex);
    }

    if (doc.contains("jobs")) {
        if (!doc["jobs"].is_array()) throw ConfigError("jobs: must be an array");
        json njobs = json::array();
        for (const auto& j : doc["jobs"]) {
            if (!j.is_object() || !j.contains("name") || !j.contains("command"))
                throw ConfigError("jobs: each job needs 'name' and 'command'");
            Job job;
            job.name = j["name"].get<std::string>();
            check_job_name(job.name);
            job.command = j["command"].get<std::string>();
            bool known = false;
            for (const auto& c : known_commands()) known = known || c == job.command;
            if (!known)
                throw ConfigError("jobs." + job.name + ": unknown command '" + job.command + "'");
            job.params = j;
            job.params.erase("name");
            job.params.erase("command");
            for (const auto& other : cfg.jobs)
                if (other.name == job.name)
                    throw ConfigError("jobs." + job.name + ": duplicate job name");
            json nj;
            nj["name"] = job.name;
            nj["command"] = job.command;
            for (auto it = job.params.begin(); it != job.params.end(); ++it)
                nj[it.key()] = it.value();
            njobs.push_back(std::move(nj));
            cfg.jobs.push_back(std::move(job));
        }
        norm["jobs"] = std::move(njobs);
    }

    if (doc.contains("tolerances")) {
        json ntol;
        for (auto it = doc["tolerances"].begin(); it != doc["tolerances"].end(); ++it) {
            if (!it.value().is_number() || it.value().get<double>() <= 0.0)
                throw ConfigError("tolerances." + it.key() + ": must be a positive number");
            cfg.tolerances[it.key()] = it.value().get<double>();
            ntol[it.key()] = it.value();
        }
        if (!cfg.tolerances.empty()) norm["tolerances"] = std::move(ntol);
    }

    if (doc.contains("output")) {
        const json& out = doc["output"];
        require_keys(out, "output", {}, {"directory", "formats"});
        if (out.contains("directory")) cfg.output_directory = out["directory"].get<std::string>();
        if (out.contains("formats")) {
            cfg.formats.clear();
            for (const auto& f : out["formats"]) {
                const std::string fmt = f.get<std::string>();
                if (fmt != "csv" && fmt != "json")
                    throw ConfigError("output.formats: unknown format '" + fmt + "'");
                cfg.formats.push_back(fmt);
            }
        }
        json nout;
        nout["directory"] = cfg.output_directory;
        nout["formats"] = cfg.formats;
        norm["output"] = std::move(nout);
    }

    // referenced names must resolve
    for (const auto& job : cfg.jobs) {
        auto need_classical = [&](const std::string& key) {
            if (!job.params.contains(key))
                throw ConfigError("jobs." + job.name + ": missing '" + key + "'");
            const std::string n = job.params[key].get<std::string>();
            if (!cfg.classical_experiments.count(n))
                throw ConfigError("jobs." + job.name + ": unknown classical experiment '" + n +
                                  "'");
        };
        if (job.command == "hellinger" || job.command == "canonical-measure")
            need_classical("experiment");
        if (job.command == "deficiency") {
            need_classical("from");
            need_classical("to");
        }
        if (job.command == "cocycle" || job.command == "canonical-state" ||
            job.command == "suff-check") {
            if (!job.params.contains("experiment"))
                throw ConfigError("jobs." + job.name + ": missing 'experiment'");
            const std::string n = job.params["experiment"].get<std::string>();
            if (!cfg.quantum_experiments.count(n))
                throw ConfigError("jobs." + job.name + ": unknown quantum experiment '" + n + "'");
        }
        if (job.command == "lan-verify") {
            if (!job.params.contains("family"))
                throw ConfigError("jobs." + job.name + ": missing 'family'");
            const std::string n = job.params["family"].get<std::string>();
            if (!cfg.families.count(n))
                throw ConfigError("jobs." + job.name + ": unknown family '" + n + "'");
        }
    }

    cfg.source = std::move(norm);
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    return parse_config(doc);
}

json normalize_config(const json& doc) { return parse_config(doc).source; }

namespace {

quantum::GroupWord parse_word(const json& j, const quantum::Experiment& e,
                              const std::string& ctx) {
    std::vector<quantum::WordLetter> letters;
    for (const auto& l : j) {
        require_keys(l, ctx, {"theta", "t"}, {"inverse"});
        letters.push_back({e.param_index(l["theta"].get<std::string>()), l["t"].get<double>(),
                           l.value("inverse", false)});
    }
    return quantum::GroupWord(letters, e.base_index());
}

lan::WordSpec parse_word_spec(const json& j, int m, const std::string& ctx) {
    lan::WordSpec spec;
    for (const auto& l : j) {
        require_keys(l, ctx, {"u", "t"}, {"adjoint"});
        auto u = parse_vector(l["u"], ctx);
        if (static_cast<int>(u.size()) != m)
            throw ConfigError(ctx + ": letter dimension does not match the family");
        spec.push_back({std::move(u), l["t"].get<double>(), l.value("adjoint", false)});
    }
    return spec;
}

classical::SimplexPoint parse_simplex(const json& j, const std::string& ctx) {
    try {
        return classical::SimplexPoint(parse_vector(j, ctx));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(ctx + ": " + e.what());
    }
}

double tol_or(const RunConfig& cfg, const std::string& key, double fallback) {
    const auto it = cfg.tolerances.find(key);
    return it == cfg.tolerances.end() ? fallback : it->second;
}

JobResult run_hellinger(const RunConfig& cfg, const Job& job) {
    const auto& e = cfg.classical_experiments.at(job.params.at("experiment").get<std::string>());
    require_keys(job.params, "jobs." + job.name, {"experiment", "z"}, {});
    JobResult res;
    res.csv_header.clear();
    for (int t = 0; t < e.num_params(); ++t) res.csv_header.push_back("z_" + e.params()[t]);
    res.csv_header.push_back("eta");
    json values = json::array();
    for (const auto& zj : job.params.at("z")) {
        const auto z = parse_simplex(zj, "jobs." + job.name + ".z");
        const double eta = classical::hellinger_transform(e, z);
        std::vector<double> row = z.z;
        row.push_back(eta);
        res.csv_rows.push_back(std::move(row));
        values.push_back(eta);
    }
    res.report["experiment"] = job.params.at("experiment");
    res.report["eta"] = std::move(values);
    res.summary = "eta evaluated at " + std::to_string(res.csv_rows.size()) + " points";
    if (!res.csv_rows.empty()) res.summary += ", first = " + format_number(res.csv_rows[0].back());
    return res;
}

JobResult run_canonical_measure(const RunConfig& cfg, const Job& job) {
    require_keys(job.params, "jobs." + job.name, {"experiment"}, {});
    const auto& e = cfg.classical_experiments.at(job.params.at("experiment").get<std::string>());
    const auto m = classical::canonical_measure(e);
    JobResult res;
    for (int t = 0; t < e.num_params(); ++t) res.csv_header.push_back("v_" + e.params()[t]);
    res.csv_header.push_back("mass");
    for (const auto& a : m.atoms) {
        std::vector<double> row = a.v;
        row.push_back(a.mass);
        res.csv_rows.push_back(std::move(row));
    }
    res.report["experiment"] = job.params.at("experiment");
    res.report["atoms"] = m.atoms.size();
    res.report["total_mass"] = m.total_mass();
    res.summary = std::to_string(m.atoms.size()) + " atoms, total mass " +
                  format_number(m.total_mass());
    return res;
}

JobResult run_deficiency(const RunConfig& cfg, const Job& job, const RunOptions& opt) {
    require_keys(job.params, "jobs." + job.name, {"from", "to"},
                 {"expect_delta", "expect_tolerance"});
    const auto& e1 = cfg.classical_experiments.at(job.params.at("from").get<std::string>());
    const auto& e2 = cfg.classical_experiments.at(job.params.at("to").get<std::string>());
    const auto fwd = classical::deficiency_lp(e1, e2);
    const auto rev = classical::deficiency_lp(e2, e1);
    JobResult res;
    res.csv_header.clear();
    for (int j = 0; j < e2.num_outcomes(); ++j) res.csv_header.push_back("m_" + std::to_string(j));
    for (const auto& row : fwd.kernel) res.csv_rows.push_back(row);
    res.report["from"] = job.params.at("from");
    res.report["to"] = job.params.at("to");
    res.report["delta"] = fwd.delta;
    res.report["delta_reverse"] = rev.delta;
    res.report["le_cam_distance"] = std::max(fwd.delta, rev.delta);
    if (job.params.contains("expect_delta")) {
        const double expect = job.params.at("expect_delta").get<double>();
        const double tol =
            job.params.value("expect_tolerance", 1e-6) * opt.tolerance_scale;
        res.pass = std::abs(fwd.delta - expect) <= tol;
        res.report["expect_delta"] = expect;
    }
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", fwd.delta);
    res.summary = buf;
    return res;
}

JobResult run_cocycle(const RunConfig& cfg, const Job& job) {
    require_keys(job.params, "jobs." + job.name, {"experiment", "theta", "times"}, {});
    const auto& e = cfg.quantum_experiments.at(job.params.at("experiment").get<std::string>());
    const int theta = e.param_index(job.params.at("theta").get<std::string>());
    JobResult res;
    res.csv_header.push_back("t");
    for (int i = 0; i < e.dim(); ++i)
        for (int j = 0; j < e.dim(); ++j) {
            res.csv_header.push_back("m" + std::to_string(i) + std::to_string(j) + "_re");
            res.csv_header.push_back("m" + std::to_string(i) + std::to_string(j) + "_im");
        }
    double max_unitarity = 0.0;
    for (const auto& tj : job.params.at("times")) {
        const double t = tj.get<double>();
        const CMat u = quantum::connes_cocycle(e, theta, t);
        std::vector<double> row{t};
        for (int i = 0; i < e.dim(); ++i)
            for (int j = 0; j < e.dim(); ++j) {
                row.push_back(u(i, j).real());
                row.push_back(u(i, j).imag());
            }
        res.csv_rows.push_back(std::move(row));
        max_unitarity =
            std::max(max_unitarity, hs_norm(u * u.adjoint() - CMat::identity(e.dim())));
    }
    res.report["experiment"] = job.params.at("experiment");
    res.report["theta"] = job.params.at("theta");
    res.report["unitarity_residual"] = max_unitarity;
    res.summary = std::to_string(res.csv_rows.size()) + " cocycles, unitarity residual " +
                  format_number(max_unitarity);
    return res;
}

JobResult run_canonical_state(const RunConfig& cfg, const Job& job, const RunOptions& opt) {
    require_keys(job.params, "jobs." + job.name, {"experiment"},
                 {"words", "random_words", "compare"});
    const auto& e = cfg.quantum_experiments.at(job.params.at("experiment").get<std::string>());
    std::vector<quantum::GroupWord> words;
    if (job.params.contains("words"))
        for (const auto& w : job.params.at("words"))
            words.push_back(parse_word(w, e, "jobs." + job.name + ".words"));
    if (job.params.contains("random_words")) {
        const json& rw = job.params.at("random_words");
        require_keys(rw, "jobs." + job.name + ".random_words", {"count"}, {"max_len"});
        const int count = rw.at("count").get<int>();
        const int max_len = rw.value("max_len", 3);
        std::mt19937 rng(opt.seed);
        std::uniform_int_distribution<int> len(1, max_len);
        std::uniform_int_distribution<int> th(0, e.num_params() - 1);
        std::uniform_real_distribution<double> tt(-2.0, 2.0);
        std::uniform_int_distribution<int> inv(0, 1);
        for (int i = 0; i < count; ++i) {
            std::vector<quantum::WordLetter> letters;
            const int L = len(rng);
            for (int k = 0; k < L; ++k) letters.push_back({th(rng), tt(rng), inv(rng) == 1});
            words.emplace_back(letters, e.base_index());
        }
    }
    JobResult res;
    res.csv_header = {"word_id", "re", "im"};
    json values = json::array();
    for (size_t i = 0; i < words.size(); ++i) {
        const cplx v = quantum::canonical_state(e, words[i]);
        res.csv_rows.push_back({static_cast<double>(i), v.real(), v.imag()});
        values.push_back(json::array({v.real(), v.imag()}));
    }
    res.report["experiment"] = job.params.at("experiment");
    res.report["values"] = std::move(values);
    res.summary = std::to_string(words.size()) + " words evaluated";
    if (!words.empty() && words[0].empty())
        res.summary += ", omega(e) = " + format_number(res.csv_rows[0][1]) + "+" +
                       format_number(res.csv_rows[0][2]) + "i";
    if (job.params.contains("compare")) {
        // equivalence probe: a necessary check on finitely many words, never a
        // proof of equivalence, hence the fixed wording below
        const std::string other_name = job.params.at("compare").get<std::string>();
        if (!cfg.quantum_experiments.count(other_name))
            throw ConfigError("jobs." + job.name + ": unknown quantum experiment '" +
                              other_name + "'");
        const auto& other = cfg.quantum_experiments.at(other_name);
        const double probe = quantum::equivalence_probe(e, other, words);
        res.report["compare"] = other_name;
        res.report["probe"] = probe;
        if (probe < 1e-10 * opt.tolerance_scale)
            res.summary += "; no discrepancy detected on " + std::to_string(words.size()) +
                           " words";
        else
            res.summary += "; discrepancy " + format_number(probe) + " on " +
                           std::to_string(words.size()) + " words";
    }
    return res;
}

JobResult run_suff_check(const RunConfig& cfg, const Job& job, const RunOptions& opt) {
    require_keys(job.params, "jobs." + job.name, {"experiment", "basis"},
                 {"t_grid", "expect"});
    const auto& e = cfg.quantum_experiments.at(job.params.at("experiment").get<std::string>());
    std::vector<double> grid = job.params.contains("t_grid")
                                   ? parse_vector(job.params.at("t_grid"), "t_grid")
                                   : quantum::default_t_grid();
    std::vector<CMat> basis;
    const json& bj = job.params.at("basis");
    if (bj.is_string()) {
        const std::string kind = bj.get<std::string>();
        if (kind == "diagonal") {
            for (int i = 0; i < e.dim(); ++i) {
                CMat m(e.dim());
                m(i, i) = 1.0;
                basis.push_back(m);
            }
        } else if (kind == "full") {
            for (int i = 0; i < e.dim(); ++i)
                for (int j = 0; j < e.dim(); ++j) {
                    CMat m(e.dim());
                    m(i, j) = 1.0;
                    basis.push_back(m);
                }
        } else {
            throw ConfigError("jobs." + job.name + ": basis must be 'diagonal', 'full' or a list");
        }
    } else {
        for (const auto& m : bj) basis.push_back(parse_matrix(m, "jobs." + job.name + ".basis"));
    }
    auto tolset = quantum::quantum_tolerances();
    tolset.sufficiency = tol_or(cfg, "quantum.sufficiency", tolset.sufficiency) *
                         opt.tolerance_scale;
    quantum::SufficiencyResult r{};
    try {
        r = quantum::is_sufficient_subalgebra(e, basis, grid, tolset);
    } catch (const std::invalid_argument& err) {
        throw ConfigError("jobs." + job.name + ": " + err.what());
    }
    const auto minimal = quantum::minimal_sufficient_basis(e, grid, tolset);

    JobResult res;
    res.csv_header = {"sufficient", "max_residual", "minimal_dimension"};
    res.csv_rows.push_back(
        {r.sufficient ? 1.0 : 0.0, r.max_residual, static_cast<double>(minimal.dimension())});
    res.report["experiment"] = job.params.at("experiment");
    res.report["sufficient"] = r.sufficient;
    res.report["max_residual"] = r.max_residual;
    res.report["minimal_dimension"] = minimal.dimension();
    res.report["t_grid"] = grid;
    res.report["note"] = "finite t-grid probe; no continuum claim";
    if (job.params.contains("expect")) res.pass = r.sufficient == job.params.at("expect").get<bool>();
    res.summary = std::string(r.sufficient ? "sufficient" : "not sufficient") + " (residual " +
                  format_number(r.max_residual) + ", minimal dim " +
                  std::to_string(minimal.dimension()) + ")";
    return res;
}

JobResult run_lan_verify(const RunConfig& cfg, const Job& job, const RunOptions& opt) {
    require_keys(job.params, "jobs." + job.name, {"family", "word"},
                 {"schedule", "base_u", "gap_threshold"});
    const auto fam_ptr = cfg.families.at(job.params.at("family").get<std::string>());
    const lan::LocalFamily fam(fam_ptr);
    const auto word =
        parse_word_spec(job.params.at("word"), fam.num_params(), "jobs." + job.name + ".word");
    std::vector<double> schedule = job.params.contains("schedule")
                                       ? parse_vector(job.params.at("schedule"), "schedule")
                                       : lan::default_schedule();
    std::optional<std::vector<double>> base;
    if (job.params.contains("base_u")) base = parse_vector(job.params.at("base_u"), "base_u");

    auto tolset = lan::lan_tolerances();
    tolset.pass_gap = job.params.value("gap_threshold",
                                       tol_or(cfg, "lan.pass_gap", tolset.pass_gap)) *
                      opt.tolerance_scale;
    const auto rep = lan::lan_report(fam, word, schedule, base ? &*base : nullptr, tolset);

    JobResult res;
    res.csv_header = {"n", "re", "im", "gap"};
    for (size_t i = 0; i < rep.ns.size(); ++i)
        res.csv_rows.push_back(
            {rep.ns[i], rep.values[i].real(), rep.values[i].imag(), rep.gaps[i]});
    res.pass = rep.pass;
    res.report["family"] = job.params.at("family");
    res.report["family_kind"] = fam.family().describe();
    res.report["word"] = job.params.at("word");
    if (base) res.report["base_u"] = *base;
    res.report["limit"] = json::array({rep.limit.real(), rep.limit.imag()});
    res.report["slope"] = rep.slope;
    res.report["final_gap"] = rep.gaps.back();
    res.report["monotone_after_burn_in"] = rep.monotone_after_burn_in;
    res.report["n_min"] = rep.n_min;
    res.report["gap_threshold"] = tolset.pass_gap;
    res.report["pass"] = rep.pass;
    res.summary = std::string(rep.pass ? "pass" : "FAIL") + ", final gap " +
                  format_number(rep.gaps.back()) + ", slope " + format_number(rep.slope);
    return res;
}

JobResult run_qubit_demo(const RunConfig&, const Job& job, const RunOptions& opt) {
    require_keys(job.params, "jobs." + job.name, {"r"}, {"u"});
    const double r = job.params.at("r").get<double>();
    std::vector<double> u{0.0, 0.0, 0.0};
    if (job.params.contains("u")) {
        u = parse_vector(job.params.at("u"), "u");
        if (u.size() != 3) throw ConfigError("jobs." + job.name + ": u must have 3 components");
    }
    lan::QubitClosedForms q{};
    try {
        q = lan::qubit_closed_forms(r, u[0], u[1], u[2]);
    } catch (const std::invalid_argument& e) {
        throw ConfigError("jobs." + job.name + ": " + e.what());
    }
    JobResult res;
    res.csv_header = {"fisher_classical", "commutator_scale", "wigner_q", "wigner_p",
                      "k_dimension"};
    res.csv_rows.push_back({q.fisher_classical, q.commutator_scale, q.wigner_center_q,
                            q.wigner_center_p, static_cast<double>(q.k_dimension)});
    res.report["r"] = r;
    res.report["u"] = u;
    res.report["fisher_classical"] = q.fisher_classical;
    res.report["pipeline_fisher"] = q.pipeline_fisher;
    res.report["pipeline_fisher_h"] = q.pipeline_fisher_h;
    res.report["commutator_scale"] = q.commutator_scale;
    res.report["wigner_center"] = json::array({q.wigner_center_q, q.wigner_center_p});
    res.report["k_dimension"] = q.k_dimension;
    res.report["score_residual"] = q.score_residual;
    res.report["center_residual"] = q.center_residual;
    const double tol = 1e-9 * opt.tolerance_scale;
    res.pass = std::abs(q.pipeline_fisher - q.fisher_classical) < tol &&
               std::abs(q.pipeline_fisher_h - q.fisher_classical) < tol &&
               q.k_dimension == 3 && q.score_residual < tol && q.center_residual < tol;
    res.summary = "I_c = " + format_number(q.fisher_classical) +
                  (res.pass ? " (pipeline agrees)" : " (PIPELINE MISMATCH)");
    return res;
}

std::string csv_content(const JobResult& res) {
    std::string out;
    for (size_t i = 0; i < res.csv_header.size(); ++i) {
        if (i) out += ',';
        out += res.csv_header[i];
    }
    out += '\n';
    for (const auto& row : res.csv_rows) {
        for (size_t i = 0; i < row.size(); ++i) {
            if (i) out += ',';
            out += format_number(row[i]);
        }
        out += '\n';
    }
    return out;
}

void flush_job(const RunConfig& cfg, const RunOptions& opt, const JobResult& res) {
    const fs::path dir = opt.out_dir.empty() ? cfg.output_directory : opt.out_dir;
    fs::create_directories(dir);
    for (const auto& fmt : cfg.formats) {
        if (fmt == "csv") write_file_atomic((dir / (res.name + ".csv")).string(), csv_content(res));
        if (fmt == "json") {
            json doc = res.report;
            doc["job"] = res.name;
            doc["command"] = res.command;
            doc["pass"] = res.pass;
            write_file_atomic((dir / (res.name + ".json")).string(), doc.dump(2) + "\n");
        }
    }
}

}  // namespace

JobResult run_job(const RunConfig& cfg, const Job& job, const RunOptions& opt) {
    JobResult res;
    if (job.command == "hellinger")
        res = run_hellinger(cfg, job);
    else if (job.command == "canonical-measure")
        res = run_canonical_measure(cfg, job);
    else if (job.command == "deficiency")
        res = run_deficiency(cfg, job, opt);
    else if (job.command == "cocycle")
        res = run_cocycle(cfg, job);
    else if (job.command == "canonical-state")
        res = run_canonical_state(cfg, job, opt);
    else if (job.command == "suff-check")
        res = run_suff_check(cfg, job, opt);
    else if (job.command == "lan-verify")
        res = run_lan_verify(cfg, job, opt);
    else if (job.command == "qubit-demo")
        res = run_qubit_demo(cfg, job, opt);
    else
        throw ConfigError("unknown command: " + job.command);
    res.name = job.name;
    res.command = job.command;
    return res;
}

int run_all(const RunConfig& cfg, const RunOptions& opt) {
    // module-level tolerance overrides apply process-wide, before any job
    auto& mt = matrix_tolerances();
    mt.hermitian = tol_or(cfg, "hermlin.hermitian", mt.hermitian);
    mt.jacobi_offdiag = tol_or(cfg, "hermlin.jacobi_offdiag", mt.jacobi_offdiag);
    mt.eig_cluster = tol_or(cfg, "hermlin.eig_cluster", mt.eig_cluster);
    auto& ct = classical::classical_tolerances();
    ct.atom_merge = tol_or(cfg, "classical.atom_merge", ct.atom_merge);
    ct.poisson_tail = tol_or(cfg, "classical.poisson_tail", ct.poisson_tail);
    ct.lp_objective = tol_or(cfg, "classical.lp_objective", ct.lp_objective);

    std::vector<const Job*> selected;
    for (const auto& job : cfg.jobs)
        if (!opt.only_command || job.command == *opt.only_command) selected.push_back(&job);

    bool all_pass = true;
    bool numerical_failure = false;

    const int workers = std::max(1, opt.parallel_jobs);
    for (size_t at = 0; at < selected.size(); at += workers) {
        const size_t hi = std::min(selected.size(), at + workers);
        std::vector<std::future<JobResult>> batch;
        for (size_t i = at; i < hi; ++i)
            batch.push_back(std::async(workers == 1 ? std::launch::deferred : std::launch::async,
                                       [&, i] { return run_job(cfg, *selected[i], opt); }));
        for (size_t i = at; i < hi; ++i) {
            try {
                const JobResult res = batch[i - at].get();
                flush_job(cfg, opt, res);
                all_pass = all_pass && res.pass;
                std::printf("[%s] %s: %s\n", res.pass ? "ok" : "fail",
                            selected[i]->name.c_str(), res.summary.c_str());
            } catch (const ConfigError& e) {
                std::fprintf(stderr, "[error] %s: %s\n", selected[i]->name.c_str(), e.what());
                return 2;
            } catch (const std::exception& e) {
                std::fprintf(stderr, "[numerical] %s: %s\n", selected[i]->name.c_str(), e.what());
                numerical_failure = true;
            }
        }
    }
    if (numerical_failure) return 3;
    return all_pass ? 0 : 1;
}

}  // namespace qlab::cli
