#include "collar/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include "collar/errors.hpp"

namespace collar {

namespace {

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        double x = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return x;
    } catch (const std::exception&) {
        throw config_error("config key '" + key + "': not a number: '" + value + "'");
    }
}

long parse_int(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        long x = std::stol(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return x;
    } catch (const std::exception&) {
        throw config_error("config key '" + key + "': not an integer: '" + value + "'");
    }
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw config_error("config key '" + key + "': not a boolean: '" + value + "'");
}

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

} // namespace

void apply_config_entry(RunConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "grid.n1") cfg.grid.n1 = static_cast<int>(parse_int(key, value));
    else if (key == "grid.n2") cfg.grid.n2 = static_cast<int>(parse_int(key, value));
    else if (key == "grid.n3") cfg.grid.n3 = static_cast<int>(parse_int(key, value));
    else if (key == "grid.x3_min") cfg.grid.x3_min = parse_double(key, value);
    else if (key == "grid.period1") cfg.grid.period1 = parse_double(key, value);
    else if (key == "grid.period2") cfg.grid.period2 = parse_double(key, value);
    else if (key == "evolve.cfl") cfg.evolve.cfl = parse_double(key, value);
    else if (key == "evolve.dt") cfg.evolve.dt = parse_double(key, value);
    else if (key == "evolve.t_end") cfg.evolve.t_end = parse_double(key, value);
    else if (key == "evolve.max_steps") cfg.evolve.max_steps = static_cast<int>(parse_int(key, value));
    else if (key == "elliptic.rel_tol") cfg.evolve.elliptic.rel_tol = parse_double(key, value);
    else if (key == "elliptic.max_iter") cfg.evolve.elliptic.max_iter = static_cast<int>(parse_int(key, value));
    else if (key == "initial_data.kind") cfg.initial_kind = value;
    else if (key == "initial_data.eps") cfg.initial_eps = parse_double(key, value);
    else if (key == "initial_data.profile") cfg.initial_profile = value;
    else if (key == "initial_data.file") cfg.initial_file = value;
    else if (key == "boundary_family.kind") cfg.family_kind = value;
    else if (key == "boundary_family.lambda") cfg.family_lambda = parse_double(key, value);
    else if (key == "boundary_family.file") cfg.family_file = value;
    else if (key == "output.dir") cfg.output_dir = value;
    else if (key == "output.every") cfg.output_every = static_cast<int>(parse_int(key, value));
    else if (key == "output.snapshots") cfg.output_snapshots = parse_bool(key, value);
    else if (key == "energy.order") cfg.energy_order = static_cast<int>(parse_int(key, value));
    else if (key == "seed") cfg.seed = parse_int(key, value);
    else throw config_error("unknown config key '" + key + "'");
}

std::vector<std::string> config_keys() {
    return {"grid.n1", "grid.n2", "grid.n3", "grid.x3_min", "grid.period1",
            "grid.period2", "evolve.cfl", "evolve.dt", "evolve.t_end",
            "evolve.max_steps", "elliptic.rel_tol", "elliptic.max_iter",
            "initial_data.kind", "initial_data.eps", "initial_data.profile",
            "initial_data.file", "boundary_family.kind", "boundary_family.lambda",
            "boundary_family.file", "output.dir", "output.every", "output.snapshots",
            "energy.order", "seed"};
}

void RunConfig::validate() const {
    if (grid.n1 < 4 || grid.n2 < 4 || grid.n3 < 4)
        throw config_error("grid.n1/n2/n3 must be at least 4");
    if (!(grid.x3_min < 0.0)) throw config_error("grid.x3_min must be negative");
    if (!(grid.period1 > 0.0) || !(grid.period2 > 0.0))
        throw config_error("grid.period1/period2 must be positive");
    if (!(evolve.cfl > 0.0)) throw config_error("evolve.cfl must be positive");
    if (evolve.dt < 0.0) throw config_error("evolve.dt must be nonnegative");
    if (!(evolve.t_end > 0.0)) throw config_error("evolve.t_end must be positive");
    if (evolve.max_steps < 1) throw config_error("evolve.max_steps must be positive");
    if (!(evolve.elliptic.rel_tol > 0.0))
        throw config_error("elliptic.rel_tol must be positive");
    if (evolve.elliptic.max_iter < 1) throw config_error("elliptic.max_iter must be positive");
    if (initial_kind != "flat" && initial_kind != "perturbed" && initial_kind != "file")
        throw config_error("initial_data.kind must be flat, perturbed, or file");
    if (initial_eps < 0.0) throw config_error("initial_data.eps must be nonnegative");
    if (initial_kind == "file" && initial_file.empty())
        throw config_error("initial_data.file is required when initial_data.kind=file");
    if (family_kind != "constant" && family_kind != "diag-exponential" &&
        family_kind != "file")
        throw config_error("boundary_family.kind must be constant, diag-exponential, or file");
    if (family_kind == "file" && family_file.empty())
        throw config_error("boundary_family.file is required when boundary_family.kind=file");
    if (output_every < 1) throw config_error("output.every must be positive");
    if (energy_order != 0 && energy_order != 1)
        throw config_error("energy.order must be 0 or 1");
}

RunConfig parse_config_text(const std::string& text) {
    RunConfig cfg;
    std::istringstream is(text);
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw config_error("config line " + std::to_string(lineno) +
                               ": expected key=value, got '" + line + "'");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (key.empty())
            throw config_error("config line " + std::to_string(lineno) + ": empty key");
        apply_config_entry(cfg, key, value);
    }
    return cfg;
}

RunConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file '" + path + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return parse_config_text(os.str());
}

std::string serialize_config(const RunConfig& cfg) {
    auto num = [](double x) {
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", x);
        return std::string(buf);
    };
    std::ostringstream os;
    os << "grid.n1=" << cfg.grid.n1 << "\n";
    os << "grid.n2=" << cfg.grid.n2 << "\n";
    os << "grid.n3=" << cfg.grid.n3 << "\n";
    os << "grid.x3_min=" << num(cfg.grid.x3_min) << "\n";
    os << "grid.period1=" << num(cfg.grid.period1) << "\n";
    os << "grid.period2=" << num(cfg.grid.period2) << "\n";
    os << "evolve.cfl=" << num(cfg.evolve.cfl) << "\n";
    os << "evolve.dt=" << num(cfg.evolve.dt) << "\n";
    os << "evolve.t_end=" << num(cfg.evolve.t_end) << "\n";
    os << "evolve.max_steps=" << cfg.evolve.max_steps << "\n";
    os << "elliptic.rel_tol=" << num(cfg.evolve.elliptic.rel_tol) << "\n";
    os << "elliptic.max_iter=" << cfg.evolve.elliptic.max_iter << "\n";
    os << "initial_data.kind=" << cfg.initial_kind << "\n";
    os << "initial_data.eps=" << num(cfg.initial_eps) << "\n";
    os << "initial_data.profile=" << cfg.initial_profile << "\n";
    os << "initial_data.file=" << cfg.initial_file << "\n";
    os << "boundary_family.kind=" << cfg.family_kind << "\n";
    os << "boundary_family.lambda=" << num(cfg.family_lambda) << "\n";
    os << "boundary_family.file=" << cfg.family_file << "\n";
    os << "output.dir=" << cfg.output_dir << "\n";
    os << "output.every=" << cfg.output_every << "\n";
    os << "output.snapshots=" << (cfg.output_snapshots ? "true" : "false") << "\n";
    os << "energy.order=" << cfg.energy_order << "\n";
    os << "seed=" << cfg.seed << "\n";
    return os.str();
}

} // namespace collar
