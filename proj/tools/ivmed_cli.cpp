// Command-line front end over the ivmed C API: estimate effects from a CSV,
// run a simulation plan, or print the oracle constants.
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ivmed.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;

struct CliError {
    int code;
    std::string message;
};

[[noreturn]] void fail(int code, const std::string& msg) { throw CliError{code, msg}; }

int exit_code_for(int api_code) {
    switch (api_code) {
        case IVMED_OK: return kExitOk;
        case IVMED_E_ARGUMENT:
        case IVMED_E_VALIDATION: return kExitValidation;
        default: return kExitRuntime;
    }
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(kExitValidation, "cannot open '" + path + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(kExitRuntime, "cannot write '" + path + "'");
    out << text;
    if (!out) fail(kExitRuntime, "write failed for '" + path + "'");
}

std::string trim(std::string s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.erase(s.begin());
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.pop_back();
    return s;
}

// flat key=value config; '#' starts a comment; repeated keys allowed
std::vector<std::pair<std::string, std::string>> parse_config(const std::string& text) {
    std::vector<std::pair<std::string, std::string>> out;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        auto eq = line.find('=');
        if (eq == std::string::npos)
            fail(kExitValidation, "config line " + std::to_string(lineno) + ": expected key = value");
        out.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    return out;
}

struct Csv {
    std::vector<std::string> header;
    std::vector<std::vector<double>> columns;  // per header column
    std::size_t rows = 0;
};

Csv parse_csv(const std::string& text) {
    Csv csv;
    std::istringstream is(text);
    std::string line;
    if (!std::getline(is, line)) fail(kExitValidation, "ParseError: empty CSV");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream hs(line);
    std::string field;
    while (std::getline(hs, field, ',')) csv.header.push_back(trim(field));
    if (csv.header.empty()) fail(kExitValidation, "ParseError: empty CSV header");
    csv.columns.assign(csv.header.size(), {});
    std::size_t rowno = 1;
    while (std::getline(is, line)) {
        ++rowno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream rs(line);
        std::size_t col = 0;
        while (std::getline(rs, field, ',')) {
            if (col >= csv.header.size())
                fail(kExitValidation, "ParseError: row " + std::to_string(rowno) + " has extra fields");
            field = trim(field);
            char* end = nullptr;
            double v = std::strtod(field.c_str(), &end);
            if (end == field.c_str() || *end != '\0')
                fail(kExitValidation, "ParseError: row " + std::to_string(rowno) + " column '" +
                                          csv.header[col] + "': not a number");
            csv.columns[col].push_back(v);
            ++col;
        }
        if (col != csv.header.size())
            fail(kExitValidation, "ParseError: row " + std::to_string(rowno) + " has " +
                                      std::to_string(col) + " fields, expected " +
                                      std::to_string(csv.header.size()));
        ++csv.rows;
    }
    if (csv.rows == 0) fail(kExitValidation, "ParseError: CSV has no data rows");
    return csv;
}

std::size_t column_index(const Csv& csv, const std::string& name) {
    for (std::size_t j = 0; j < csv.header.size(); ++j) {
        if (csv.header[j] == name) return j;
    }
    fail(kExitValidation, "ValidationError: CSV has no column '" + name + "'");
}

int cmd_estimate(const std::string& data_path, const std::string& config_path,
                 const std::string& out_path) {
    Csv csv = parse_csv(read_file(data_path));
    auto cfg = parse_config(read_file(config_path));

    std::vector<std::string> w_cols;
    std::map<std::string, std::string> roles;  // singleton roles a,z,l,m,y
    std::vector<std::string> estimands;
    std::string scenario = "all_correct";
    std::string overrides;
    int folds = 5;
    uint64_t seed = 1;
    double alpha = 0.05, clip = 1e-3;
    for (const auto& [key, val] : cfg) {
        if (key == "w") {
            w_cols.push_back(val);
        } else if (key == "a" || key == "z" || key == "l" || key == "m" || key == "y") {
            if (roles.count(key))
                fail(kExitValidation, "ValidationError: role '" + key + "' given twice");
            roles[key] = val;
        } else if (key == "estimand") {
            estimands.push_back(val);
        } else if (key == "scenario") {
            scenario = val;
        } else if (key.rfind("learner.", 0) == 0) {
            if (!overrides.empty()) overrides += ";";
            overrides += key.substr(8) + "=" + val;
        } else if (key == "folds") {
            folds = std::stoi(val);
        } else if (key == "seed") {
            seed = std::stoull(val);
        } else if (key == "alpha") {
            alpha = std::stod(val);
        } else if (key == "clip") {
            clip = std::stod(val);
        } else {
            fail(kExitValidation, "ValidationError: unknown config key '" + key + "'");
        }
    }
    if (const char* env = std::getenv("IVMED_SEED")) seed = std::strtoull(env, nullptr, 10);
    if (w_cols.empty()) fail(kExitValidation, "ValidationError: need at least one 'w' column");
    for (const char* role : {"a", "z", "m", "y"}) {
        if (!roles.count(role))
            fail(kExitValidation, std::string("ValidationError: missing role '") + role + "'");
    }
    if (estimands.empty()) fail(kExitValidation, "ValidationError: no estimand requested");

    std::size_t n = csv.rows;
    std::vector<double> w(n * w_cols.size());
    std::vector<const char*> w_names;
    for (std::size_t j = 0; j < w_cols.size(); ++j) {
        const auto& col = csv.columns[column_index(csv, w_cols[j])];
        for (std::size_t i = 0; i < n; ++i) w[i * w_cols.size() + j] = col[i];
        w_names.push_back(w_cols[j].c_str());
    }
    const double* a = csv.columns[column_index(csv, roles["a"])].data();
    const double* z = csv.columns[column_index(csv, roles["z"])].data();
    const double* m = csv.columns[column_index(csv, roles["m"])].data();
    const double* y = csv.columns[column_index(csv, roles["y"])].data();
    const double* l = roles.count("l") ? csv.columns[column_index(csv, roles["l"])].data() : nullptr;

    ivmed_dataset* ds = nullptr;
    int rc = ivmed_dataset_create(static_cast<int64_t>(n), static_cast<int32_t>(w_cols.size()),
                                  w.data(), w_names.data(), a, z, l, m, y, &ds);
    if (rc != IVMED_OK) fail(exit_code_for(rc), ivmed_last_error());

    std::vector<const char*> est_ptrs;
    for (const auto& e : estimands) est_ptrs.push_back(e.c_str());
    ivmed_reports* reports = nullptr;
    rc = ivmed_estimate(ds, est_ptrs.data(), static_cast<int32_t>(est_ptrs.size()),
                        overrides.empty() ? scenario.c_str() : nullptr,
                        overrides.empty() ? nullptr : overrides.c_str(), folds, seed, alpha,
                        clip, &reports);
    if (rc != IVMED_OK) {
        std::string msg = ivmed_last_error();
        ivmed_dataset_destroy(ds);
        fail(exit_code_for(rc), msg);
    }

    bool any_weak = false;
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (int32_t i = 0; i < ivmed_reports_count(reports); ++i) {
        nlohmann::ordered_json o;
        o["estimand"] = ivmed_report_estimand(reports, i);
        bool ok = ivmed_report_status(reports, i) == IVMED_REPORT_OK;
        o["status"] = ok ? "ok" : "weak_instrument";
        if (ok) {
            o["psi_hat"] = ivmed_report_psi(reports, i);
            o["se"] = ivmed_report_se(reports, i);
            o["ci_lower"] = ivmed_report_ci_lower(reports, i);
            o["ci_upper"] = ivmed_report_ci_upper(reports, i);
        } else {
            any_weak = true;
            o["message"] = ivmed_report_message(reports, i);
        }
        o["numerator_hat"] = ivmed_report_numerator(reports, i);
        o["denominator_hat"] = ivmed_report_denominator(reports, i);
        o["n"] = n;
        o["folds"] = folds;
        o["seed"] = seed;
        arr.push_back(o);
    }
    ivmed_reports_destroy(reports);
    ivmed_dataset_destroy(ds);
    write_file(out_path, arr.dump(2) + "\n");
    if (any_weak) {
        std::fprintf(stderr, "estimate: weak instrument; partial output written to %s\n",
                     out_path.c_str());
        return kExitRuntime;
    }
    return kExitOk;
}

int cmd_simulate(const std::string& plan_path, const std::string& out_path,
                 const std::string& format_opt, int jobs) {
    std::string format = format_opt;
    if (format.empty()) {
        format = out_path.size() > 5 && out_path.substr(out_path.size() - 5) == ".json" ? "json"
                                                                                        : "csv";
    }
    std::string plan = read_file(plan_path);
    char* table = nullptr;
    int rc = ivmed_simulate(plan.c_str(), format.c_str(), jobs, &table);
    if (rc != IVMED_OK) fail(exit_code_for(rc), ivmed_last_error());
    write_file(out_path, table);
    ivmed_string_destroy(table);
    return kExitOk;
}

int cmd_oracle(const std::string& setting) {
    char* text = nullptr;
    int rc = ivmed_oracle_fixtures(setting.c_str(), &text);
    if (rc != IVMED_OK) fail(exit_code_for(rc), ivmed_last_error());
    std::fputs(text, stdout);
    ivmed_string_destroy(text);
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"complier interventional direct/indirect effect estimation"};
    app.set_version_flag("--version", std::string(ivmed_version()));
    app.require_subcommand(1);

    std::string data_path, config_path, out_path, plan_path, format, setting;
    int jobs = 1;

    auto* est = app.add_subcommand("estimate", "estimate effects from a CSV dataset");
    est->add_option("--data", data_path, "input CSV")->required();
    est->add_option("--config", config_path, "role map and estimation settings")->required();
    est->add_option("--out", out_path, "output JSON path")->required();

    auto* sim = app.add_subcommand("simulate", "run a Monte Carlo simulation plan");
    sim->add_option("--plan", plan_path, "plan file")->required();
    sim->add_option("--out", out_path, "output table path")->required();
    sim->add_option("--format", format, "csv or json (default: from extension)");
    sim->add_option("--jobs", jobs, "worker threads");

    auto* orc = app.add_subcommand("oracle", "print oracle golden constants");
    orc->add_option("--setting", setting, "single or double")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : kExitValidation;
    }

    try {
        if (est->parsed()) return cmd_estimate(data_path, config_path, out_path);
        if (sim->parsed()) return cmd_simulate(plan_path, out_path, format, jobs);
        if (orc->parsed()) return cmd_oracle(setting);
    } catch (const CliError& e) {
        std::fprintf(stderr, "error: %s\n", e.message.c_str());
        return e.code;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitRuntime;
    }
    return kExitValidation;
}
