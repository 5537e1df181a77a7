#include "collar/run.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>

#include "collar/analytic.hpp"
#include "collar/diagnostics.hpp"
#include "collar/errors.hpp"

namespace fs = std::filesystem;

namespace collar {

namespace {

void set_flat(SymTensorField& g) {
    for (int c = 0; c < 6; ++c) g[c].fill(0.0);
    g[SymTensorField::comp(0, 0)].fill(1.0);
    g[SymTensorField::comp(1, 1)].fill(1.0);
    g[SymTensorField::comp(2, 2)].fill(1.0);
}

// Traceless tangential perturbation profile, vanishing with its first
// derivative at both faces so the face data stay exactly flat.
struct TtProfile {
    std::vector<double> a11, a12; // per x3 mode: amplitude of the cos factor
    std::vector<int> mode;
    double eval(double xi, const std::vector<double>& amp) const {
        double b = std::sin(M_PI * xi);
        b *= b;
        double s = 0.0;
        for (std::size_t m = 0; m < amp.size(); ++m)
            s += amp[m] * b * std::cos(mode[m] * M_PI * xi);
        return s;
    }
};

TtProfile make_profile(const RunConfig& cfg) {
    TtProfile p;
    if (cfg.initial_profile == "tt") {
        p.mode = {0, 1, 2};
        p.a11 = {1.0, 0.4, 0.15};
        p.a12 = {0.6, -0.3, 0.1};
    } else if (cfg.initial_profile == "tt-random") {
        std::mt19937 rng(static_cast<unsigned>(cfg.seed));
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        p.mode = {0, 1, 2, 3};
        for (int m = 0; m < 4; ++m) {
            p.a11.push_back(u(rng));
            p.a12.push_back(u(rng));
        }
    } else {
        throw config_error("unknown initial_data.profile '" + cfg.initial_profile + "'");
    }
    return p;
}

void read_snapshot_file(const std::string& path, const Grid& grid, SymTensorField& g,
                        SymTensorField& k);

} // namespace

void builtin_initial_data(const RunConfig& cfg, const Grid& grid, SymTensorField& g,
                          SymTensorField& k) {
    set_flat(g);
    for (int c = 0; c < 6; ++c) k[c].fill(0.0);
    if (cfg.initial_kind == "flat") return;
    if (cfg.initial_kind == "file") {
        read_snapshot_file(cfg.initial_file, grid, g, k);
        return;
    }
    TtProfile p = make_profile(cfg);
    const double L = -grid.spec().x3_min;
    for (int i3 = -grid.ghost(); i3 <= grid.n3() - 1 + grid.ghost(); ++i3) {
        double xi = (grid.x3(i3) - grid.spec().x3_min) / L;
        double f11 = cfg.initial_eps * p.eval(xi, p.a11);
        double f12 = cfg.initial_eps * p.eval(xi, p.a12);
        for (int i2 = 0; i2 < grid.n2(); ++i2)
            for (int i1 = 0; i1 < grid.n1(); ++i1) {
                k(0, 0, i1, i2, i3) = f11;
                k(1, 1, i1, i2, i3) = -f11;
                k(0, 1, i1, i2, i3) = f12;
            }
    }
}

BoundaryData make_boundary_data(const RunConfig& cfg, const Grid& grid) {
    BoundaryData bd;
    if (cfg.family_kind == "constant") {
        auto fam = std::make_shared<ConstantFamily>();
        bd.inner = fam;
        bd.outer = fam;
    } else if (cfg.family_kind == "diag-exponential") {
        auto fam = std::make_shared<DiagExponentialFamily>(cfg.family_lambda);
        bd.inner = fam;
        bd.outer = fam;
    } else if (cfg.family_kind == "file") {
        auto fam = std::make_shared<TableFamily>(cfg.family_file, grid.n1(), grid.n2());
        bd.inner = fam;
        bd.outer = fam;
    } else {
        throw config_error("unknown boundary_family.kind '" + cfg.family_kind + "'");
    }
    return bd;
}

std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

std::string diagnostics_header() {
    return "t,ham_l2,mom1_l2,mom2_l2,mom3_l2,trk_l2,trk_max,ricci_ij_l2,ricci_00_l2,"
           "gi_l2,einstein_l2,gtilde_l2,energy_k,energy_total,c_bd,bc_knn_max,"
           "bc_kna_max,bc_kcc_max";
}

std::string diagnostics_row(const DiagnosticsRecord& rec) {
    const double cols[18] = {rec.t, rec.ham_l2, rec.mom_l2[0], rec.mom_l2[1],
                             rec.mom_l2[2], rec.trk_l2, rec.trk_max, rec.ricci_ij_l2,
                             rec.ricci_00_l2, rec.gi_l2, rec.einstein_l2, rec.gtilde_l2,
                             rec.energy_k, rec.energy_total, rec.c_bd, rec.bc_knn_max,
                             rec.bc_kna_max, rec.bc_kcc_max};
    std::string out;
    for (int i = 0; i < 18; ++i) {
        if (i) out += ',';
        out += format_double(cols[i]);
    }
    return out;
}

void write_snapshot_field(std::ostream& os, const std::string& name, const ScalarField& f,
                          double t) {
    const Grid& gr = f.grid();
    os << "FIELD name=" << name << " shape=" << gr.n1() << ',' << gr.n2() << ','
       << gr.n3() << " t=" << format_double(t) << "\n";
    static_assert(sizeof(double) == 8);
    for (int i1 = 0; i1 < gr.n1(); ++i1)
        for (int i2 = 0; i2 < gr.n2(); ++i2)
            for (int i3 = 0; i3 < gr.n3(); ++i3) {
                double x = f(i1, i2, i3);
                std::uint64_t bits;
                std::memcpy(&bits, &x, 8);
                char b[8];
                for (int byte = 0; byte < 8; ++byte)
                    b[byte] = static_cast<char>((bits >> (8 * byte)) & 0xff);
                os.write(b, 8);
            }
}

namespace {

void read_snapshot_field(std::istream& is, const std::string& want, const Grid& grid,
                         ScalarField& f) {
    std::string header;
    if (!std::getline(is, header))
        throw config_error("initial data file: missing field '" + want + "'");
    std::ostringstream expect;
    expect << "FIELD name=" << want << " shape=" << grid.n1() << ',' << grid.n2() << ','
           << grid.n3() << " t=";
    if (header.rfind(expect.str(), 0) != 0)
        throw config_error("initial data file: expected header for '" + want + "', got '" +
                           header + "'");
    for (int i1 = 0; i1 < grid.n1(); ++i1)
        for (int i2 = 0; i2 < grid.n2(); ++i2)
            for (int i3 = 0; i3 < grid.n3(); ++i3) {
                char b[8];
                if (!is.read(b, 8))
                    throw config_error("initial data file: truncated payload in '" + want + "'");
                std::uint64_t bits = 0;
                for (int byte = 0; byte < 8; ++byte)
                    bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(b[byte]))
                            << (8 * byte);
                double x;
                std::memcpy(&x, &bits, 8);
                f(i1, i2, i3) = x;
            }
}

const char* kCompNames[6] = {"11", "12", "13", "22", "23", "33"};

void read_snapshot_file(const std::string& path, const Grid& grid, SymTensorField& g,
                        SymTensorField& k) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw config_error("cannot open initial data file '" + path + "'");
    for (int c = 0; c < 6; ++c) read_snapshot_field(in, std::string("g") + kCompNames[c], grid, g[c]);
    for (int c = 0; c < 6; ++c) read_snapshot_field(in, std::string("k") + kCompNames[c], grid, k[c]);
    fill_ghosts_extrapolate(g);
    fill_ghosts_extrapolate(k);
}

void write_manifest(const std::string& mode, const RunConfig& cfg) {
    std::ofstream out(fs::path(cfg.output_dir) / "run_manifest.txt");
    if (!out) throw config_error("output.dir '" + cfg.output_dir + "' is not writable");
    out << "program=collar_solve\n";
    out << "version=0.1.0\n";
    out << "diagnostics_schema=1\n";
    out << "mode=" << mode << "\n";
    out << serialize_config(cfg);
}

struct RunArtifacts {
    std::vector<DiagnosticsRecord> rows;
};

DiagnosticsRecord diagnostics_of(const State& s, const BoundaryData& bd,
                                 const SymTensorField& g0, const ScalarField& dtphi, int r,
                                 const State* prev, double dt) {
    GeometryData geo(s.g.grid());
    SymTensorField gc = s.g;
    build_geometry(gc, geo);
    return compute_diagnostics(s, geo, bd, g0, dtphi, r, prev, dt);
}

void write_rows(const RunConfig& cfg, const std::vector<DiagnosticsRecord>& rows) {
    std::ofstream out(fs::path(cfg.output_dir) / "diagnostics.csv", std::ios::binary);
    if (!out) throw config_error("output.dir '" + cfg.output_dir + "' is not writable");
    out << diagnostics_header() << "\n";
    for (const auto& rec : rows) out << diagnostics_row(rec) << "\n";
}

void write_final_snapshot(const RunConfig& cfg, const State& s) {
    if (!cfg.output_snapshots) return;
    std::ofstream out(fs::path(cfg.output_dir) / "snapshot_final.bin", std::ios::binary);
    if (!out) throw config_error("output.dir '" + cfg.output_dir + "' is not writable");
    for (int c = 0; c < 6; ++c)
        write_snapshot_field(out, std::string("g") + kCompNames[c], s.g[c], s.t);
    for (int c = 0; c < 6; ++c)
        write_snapshot_field(out, std::string("k") + kCompNames[c], s.k[c], s.t);
    for (int c = 0; c < 6; ++c)
        write_snapshot_field(out, std::string("v") + kCompNames[c], s.v[c], s.t);
    write_snapshot_field(out, "phi", s.phi, s.t);
}

AnalyticMetric mms_family(const RunConfig& cfg) {
    double eps = cfg.initial_eps > 0.0 ? cfg.initial_eps : 0.05;
    double depth = -cfg.grid.x3_min;
    if (cfg.initial_profile == "x1x3") return mms_metric_x1x3(eps, depth);
    return mms_metric_x3(eps, depth);
}

// Shared driver for evolve and mms: integrate to t_end recording diagnostics
// on the output cadence.
State drive(const RunConfig& cfg, const Grid& grid, std::shared_ptr<const MmsForcing> mms,
            RunArtifacts& art) {
    BoundaryData bd = make_boundary_data(cfg, grid);
    Evolver evolver(grid, cfg.evolve, bd, mms);
    State s(grid);
    s.phi.fill(1.0);
    for (int c = 0; c < 6; ++c) s.v[c].fill(0.0);
    if (mms) {
        sample_solution(mms->metric, 0.0, s.g, s.k, s.v, s.phi);
        evolver.initialize(s, false);
    } else {
        builtin_initial_data(cfg, grid, s.g, s.k);
        evolver.initialize(s);
    }
    SymTensorField g0 = s.g;
    const int r = cfg.energy_order;
    std::optional<State> prev;
    double prev_t = s.t;
    evolver.run(s, [&](const State& st, int step) {
        bool record = step % cfg.output_every == 0 || st.t >= cfg.evolve.t_end;
        if (record) {
            ScalarField dtphi = evolver.dtphi_at(st.t);
            const State* pv = prev ? &*prev : &st;
            double dtv = prev ? st.t - prev_t : 1.0;
            if (!(dtv > 0.0)) dtv = 1.0;
            art.rows.push_back(diagnostics_of(st, bd, g0, dtphi, r, pv, dtv));
            prev = st;
            prev_t = st.t;
        }
    });
    return s;
}

} // namespace

int run_mode(const std::string& mode, const RunConfig& cfg) {
    cfg.validate();
    std::error_code ec;
    fs::create_directories(cfg.output_dir, ec);
    write_manifest(mode, cfg);
    Grid grid(cfg.grid);

    if (mode == "evolve" || mode == "mms") {
        RunArtifacts art;
        std::shared_ptr<const MmsForcing> mms;
        if (mode == "mms") mms = std::make_shared<MmsForcing>(MmsForcing{mms_family(cfg)});
        State s = drive(cfg, grid, mms, art);
        write_rows(cfg, art.rows);
        write_final_snapshot(cfg, s);
        if (mms) {
            State ex(grid);
            sample_solution(mms->metric, s.t, ex.g, ex.k, ex.v, ex.phi);
            ex.g -= s.g;
            ex.k -= s.k;
            ex.v -= s.v;
            ex.phi -= s.phi;
            std::ofstream out(fs::path(cfg.output_dir) / "mms_errors.csv", std::ios::binary);
            out << "field,linf_error\n";
            out << "g," << format_double(ex.g.max_abs_interior()) << "\n";
            out << "k," << format_double(ex.k.max_abs_interior()) << "\n";
            out << "v," << format_double(ex.v.max_abs_interior()) << "\n";
            out << "phi," << format_double(ex.phi.max_abs_interior()) << "\n";
        }
        return 0;
    }

    if (mode == "picard") {
        BoundaryData bd = make_boundary_data(cfg, grid);
        State init(grid);
        init.phi.fill(1.0);
        for (int c = 0; c < 6; ++c) init.v[c].fill(0.0);
        builtin_initial_data(cfg, grid, init.g, init.k);
        PicardResult res = picard_solve(init, cfg.evolve, bd);
        std::cout << "picard iterations=" << res.iterations
                  << " delta=" << format_double(res.delta)
                  << " converged=" << (res.converged ? "true" : "false") << "\n";
        if (!res.converged) throw solver_error("sweep iteration did not converge");
        SymTensorField g0(grid), k0(grid);
        builtin_initial_data(cfg, grid, g0, k0);
        ScalarField dtphi(grid);
        dtphi.fill(0.0);
        std::vector<DiagnosticsRecord> rows;
        rows.push_back(diagnostics_of(res.state, bd, g0, dtphi, cfg.energy_order,
                                      &res.state, 1.0));
        write_rows(cfg, rows);
        write_final_snapshot(cfg, res.state);
        return 0;
    }

    if (mode == "trace-check") {
        BoundaryData bd = make_boundary_data(cfg, grid);
        Evolver evolver(grid, cfg.evolve, bd);
        State s(grid);
        s.phi.fill(1.0);
        for (int c = 0; c < 6; ++c) s.v[c].fill(0.0);
        builtin_initial_data(cfg, grid, s.g, s.k);
        evolver.initialize(s);
        double res = trace_identity_check(s, cfg.evolve.elliptic);
        std::cout << "trace_identity_residual=" << format_double(res) << "\n";
        SymTensorField g0 = s.g;
        ScalarField dtphi = evolver.dtphi_at(s.t);
        std::vector<DiagnosticsRecord> rows;
        rows.push_back(diagnostics_of(s, bd, g0, dtphi, cfg.energy_order, &s, 1.0));
        write_rows(cfg, rows);
        return 0;
    }

    if (mode == "compat-check") {
        BoundaryData bd = make_boundary_data(cfg, grid);
        State s(grid);
        builtin_initial_data(cfg, grid, s.g, s.k);
        // prepare the raw data without imposing the boundary conditions: the
        // whole point is to measure how far the data is from satisfying them
        GeometryData geo(grid);
        build_geometry(s.g, geo);
        fill_ghosts_extrapolate(s.k);
        ScalarField k2 = norm2(geo.ginv, s.k);
        s.phi = solve_lapse(geo.ginv, geo.gamma, k2, cfg.evolve.elliptic);
        fill_ghosts_extrapolate(s.phi);
        s.v = initial_kdot(s, geo);
        SymTensorField ric = ricci(geo.gamma);
        const double tol = 1e-8 + 10.0 * cfg.initial_eps * cfg.initial_eps;
        bool ok = true;
        for (Face f : {Face::inner, Face::outer}) {
            CompatibilityReport rep = compatibility_check(s.g, s.k, s.v, s.phi, geo.ginv,
                                                          geo.gamma, geo.frame, ric,
                                                          bd.at(f), f);
            std::cout << (f == Face::inner ? "inner" : "outer")
                      << " conformal_class=" << format_double(rep.conformal_class)
                      << " hat=" << format_double(rep.hat)
                      << " dt_hat=" << format_double(rep.dt_hat) << "\n";
            ok = ok && rep.ok(tol);
        }
        if (!ok)
            throw compat_error("initial data incompatible with the boundary family");
        return 0;
    }

    if (mode == "convergence-suite") {
        std::vector<std::array<double, 4>> errs; // g, k, v, phi per level
        for (int lvl = 0; lvl < 3; ++lvl) {
            RunConfig c2 = cfg;
            c2.grid.n1 = cfg.grid.n1 << lvl;
            c2.grid.n2 = cfg.grid.n2 << lvl;
            c2.grid.n3 = cfg.grid.n3 << lvl;
            if (cfg.evolve.dt > 0.0) c2.evolve.dt = cfg.evolve.dt / (1 << lvl);
            Grid g2(c2.grid);
            RunArtifacts art;
            auto mms = std::make_shared<MmsForcing>(MmsForcing{mms_family(c2)});
            c2.output_every = cfg.evolve.max_steps; // suppress mid-run records
            State s = drive(c2, g2, mms, art);
            State ex(g2);
            sample_solution(mms->metric, s.t, ex.g, ex.k, ex.v, ex.phi);
            ex.g -= s.g;
            ex.k -= s.k;
            ex.v -= s.v;
            ex.phi -= s.phi;
            errs.push_back({ex.g.max_abs_interior(), ex.k.max_abs_interior(),
                            ex.v.max_abs_interior(), ex.phi.max_abs_interior()});
        }
        std::ofstream out(fs::path(cfg.output_dir) / "rates.csv", std::ios::binary);
        if (!out) throw config_error("output.dir '" + cfg.output_dir + "' is not writable");
        out << "field,err_0,err_1,err_2,rate01,rate12,monotone\n";
        const char* names[4] = {"g", "k", "v", "phi"};
        for (int f = 0; f < 4; ++f) {
            ConvergenceRate cr = convergence_rate(errs[0][f], errs[1][f], errs[2][f]);
            out << names[f] << ',' << format_double(errs[0][f]) << ','
                << format_double(errs[1][f]) << ',' << format_double(errs[2][f]) << ','
                << format_double(cr.rate01) << ',' << format_double(cr.rate12) << ','
                << (cr.monotone ? "true" : "false") << "\n";
        }
        return 0;
    }

    throw config_error("unknown mode '" + mode + "'");
}

} // namespace collar
