#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "qlab/classical.hpp"
#include "qlab/family.hpp"
#include "qlab/lan.hpp"
#include "qlab/quantum.hpp"

namespace qlab::cli {

using json = nlohmann::ordered_json;

/// Schema violation in the configuration document (exit code 2).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Job {
    std::string name;
    std::string command;
    json params;  // command-specific keys, already schema-checked
};

/// Parsed configuration: named families and experiments, a job list,
/// tolerance overrides and output options.
struct RunConfig {
    std::map<std::string, std::shared_ptr<const Family>> families;
    std::map<std::string, classical::Experiment> classical_experiments;
    std::map<std::string, quantum::Experiment> quantum_experiments;
    std::vector<Job> jobs;
    std::map<std::string, double> tolerances;
    std::string output_directory = "out";
    std::vector<std::string> formats{"csv", "json"};

    json source;  // normalized document this config was built from
};

RunConfig parse_config(const json& doc);
RunConfig load_config(const std::string& path);

/// Normal form of the document: known keys only, canonical ordering. A parse
/// of the normal form reproduces it byte for byte.
json normalize_config(const json& doc);

/// Matrix codec used across the config: [[ [re,im], ... ], ...] row-major.
CMat parse_matrix(const json& j, const std::string& context);
json matrix_to_json(const CMat& m);

struct RunOptions {
    std::string out_dir;        // overrides config output.directory when set
    int parallel_jobs = 1;
    double tolerance_scale = 1.0;
    unsigned seed = 0;
    std::optional<std::string> only_command;  // subcommand filter
};

struct JobResult {
    std::string name;
    std::string command;
    bool pass = true;
    std::string summary;  // one line for the console
    json report;          // written as <name>.json
    std::vector<std::string> csv_header;
    std::vector<std::vector<double>> csv_rows;  // written as <name>.csv
};

JobResult run_job(const RunConfig& cfg, const Job& job, const RunOptions& opt);

/// Executes the job list in declared order (optionally in parallel), flushing
/// artifacts as jobs complete. Returns the process exit code:
/// 0 all pass, 1 some pass flag false, 3 numerical failure.
int run_all(const RunConfig& cfg, const RunOptions& opt);

/// 17-significant-digit, locale-independent numeric formatting for CSV.
std::string format_number(double v);

/// Atomic file write (temp + rename).
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace qlab::cli
