#include "blhomlab/io.hpp"

#include "blhomlab/errors.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>
#include <fstream>

namespace blhomlab::io {

using nlohmann::json;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << content;
}

namespace {

std::string lattice_row(const geometry::LatticeVec& xi, int dim, double abs_ndot, double norm,
                        bool violates) {
    std::string row;
    for (int i = 0; i < dim; ++i) row += std::to_string(xi[i]) + ",";
    row += fmt(abs_ndot) + "," + fmt(norm) + "," + (violates ? "1" : "0") + "\n";
    return row;
}

std::string lattice_header(int dim) {
    return dim == 3 ? "xi1,xi2,xi3,abs_Ndot_xi,norm_xi,violates\n"
                    : "xi1,xi2,abs_Ndot_xi,norm_xi,violates\n";
}

double lattice_norm(const geometry::LatticeVec& xi, int dim) {
    double s = 0;
    for (int i = 0; i < dim; ++i) s += double(xi[i]) * double(xi[i]);
    return std::sqrt(s);
}

} // namespace

std::string diophantine_csv(const geometry::DiophantineReport& rep) {
    std::string out = lattice_header(rep.dim);
    bool worst_violates = false;
    for (const auto& v : rep.violations) {
        if (v.xi == rep.worst_xi) worst_violates = true;
    }
    out += lattice_row(rep.worst_xi, rep.dim, rep.worst_abs_ndot,
                       lattice_norm(rep.worst_xi, rep.dim), worst_violates);
    for (const auto& v : rep.violations) {
        if (v.xi == rep.worst_xi) continue;
        out += lattice_row(v.xi, rep.dim, v.abs_ndot, lattice_norm(v.xi, rep.dim), true);
    }
    return out;
}

std::string xi_sequence_csv(const geometry::XiSequence& seq) {
    std::string out = lattice_header(seq.dim);
    for (const auto& e : seq.entries) {
        out += lattice_row(e.xi, seq.dim, e.abs_ndot, e.norm, true);
    }
    return out;
}

std::string grid_field_csv(const blsolver::GridField& field) {
    std::string out = "theta1,theta2,t,V\n";
    const double ht = field.T / field.nt;
    for (int j = 0; j <= field.nt; ++j) {
        double t = field.t0 + j * ht;
        for (int i1 = 0; i1 < field.n1; ++i1) {
            double th1 = field.tangential_dims == 1 ? i1 * field.length1 / field.n1
                                                    : double(i1) / field.n1;
            for (int i2 = 0; i2 < field.n2; ++i2) {
                double th2 = field.tangential_dims == 1 ? 0.0 : double(i2) / field.n2;
                out += fmt(th1) + "," + fmt(th2) + "," + fmt(t) + "," +
                       fmt(field.at(j, i1, i2)) + "\n";
            }
        }
    }
    return out;
}

std::string decay_csv(const std::vector<asymptotics::DecaySample>& samples) {
    std::string out = "t,l2,linf\n";
    for (const auto& s : samples) {
        out += fmt(s.t) + "," + fmt(s.l2) + "," + fmt(s.linf) + "\n";
    }
    return out;
}

std::string witness_csv(const asymptotics::SlowWitness& witness,
                        const asymptotics::WitnessReport& report) {
    std::string out = "M,xi1,xi2,absNdotxi,tM,value,threshold,pass\n";
    for (const auto& row : report.rows) {
        const asymptotics::WitnessLevel* lev = nullptr;
        for (const auto& l : witness.levels) {
            if (l.level == row.level) lev = &l;
        }
        if (!lev) continue;
        out += std::to_string(row.level) + "," + std::to_string(lev->xi[0]) + "," +
               std::to_string(lev->xi[1]) + "," + fmt(lev->abs_ndot) + "," + fmt(row.t) + "," +
               fmt(std::exp(row.log_value)) + "," + fmt(std::exp(row.log_paper_bound)) + "," +
               (row.pass ? "1" : "0") + "\n";
    }
    return out;
}

std::string sweep_csv(const blsolver::SweepReport& rep) {
    std::string out = "eps,interior_linf\n";
    for (const auto& r : rep.rows) out += fmt(r.eps) + "," + fmt(r.interior_linf) + "\n";
    return out;
}

std::string offsets_csv(const asymptotics::OffsetReport& rep) {
    std::string out = "a,tail,uncertainty\n";
    for (const auto& r : rep.rows)
        out += fmt(r.a) + "," + fmt(r.tail) + "," + fmt(r.uncertainty) + "\n";
    return out;
}

std::string ergodic_csv(const asymptotics::ErgodicReport& rep) {
    std::string out = "radius,window_mean,gap\n";
    for (const auto& r : rep.rows)
        out += fmt(r.radius) + "," + fmt(r.window_mean) + "," + fmt(r.gap) + "\n";
    return out;
}

namespace {

std::string field_csv(int grid, const std::vector<double>& f, const std::string& name) {
    std::string out = "# grid=" + std::to_string(grid) + " field=" + name + "\n";
    for (int i = 0; i < grid; ++i) {
        for (int j = 0; j < grid; ++j) {
            out += fmt(f[static_cast<size_t>(i) * grid + j]);
            out += (j + 1 == grid) ? '\n' : ',';
        }
    }
    return out;
}

} // namespace

std::vector<std::string> write_corrector_dir(const std::filesystem::path& dir,
                                             const cell::CorrectorSet& set) {
    std::filesystem::create_directories(dir);
    std::vector<std::string> files;
    auto emit = [&](const std::string& name, const std::vector<double>& f) {
        std::string fname = name + ".csv";
        write_file(dir / fname, field_csv(set.grid, f, name));
        files.push_back(fname);
    };
    emit("chi1", set.chi.chi[0]);
    emit("chi2", set.chi.chi[1]);
    const char* idx[4] = {"11", "12", "21", "22"};
    for (int k = 0; k < 4; ++k) {
        emit(std::string("gamma") + idx[k], set.gamma.gamma[k]);
        emit(std::string("b") + idx[k], set.gamma.b[k]);
        emit(std::string("phi") + idx[k], set.flux.phi[k]);
    }
    emit("psi12_1", set.flux.psi12[0]);
    emit("psi12_2", set.flux.psi12[1]);

    json summary;
    summary["grid"] = set.grid;
    summary["a0"] = {{"a11", set.a0[0]}, {"a12", set.a0[1]}, {"a21", set.a0[2]},
                     {"a22", set.a0[3]}};
    summary["chi_residual"] = {set.chi.residual[0], set.chi.residual[1]};
    summary["gamma_residual"] = std::vector<double>(set.gamma.residual.begin(),
                                                    set.gamma.residual.end());
    summary["phi_divergence_residual"] = set.flux.divergence_residual;
    summary["psi_identity_residual"] = set.flux.identity_residual;
    write_file(dir / "summary.json", summary.dump(2) + "\n");
    files.push_back("summary.json");
    return files;
}

namespace {

json lattice_json(const geometry::LatticeVec& xi, int dim) {
    json a = json::array();
    for (int i = 0; i < dim; ++i) a.push_back(xi[i]);
    return a;
}

} // namespace

json diophantine_json(const geometry::DiophantineReport& rep) {
    json j;
    j["dim"] = rep.dim;
    j["tau"] = rep.tau;
    j["radius"] = rep.radius;
    j["best_constant"] = rep.best_constant;
    j["worst_xi"] = lattice_json(rep.worst_xi, rep.dim);
    j["worst_abs_ndot"] = rep.worst_abs_ndot;
    j["zero_count"] = rep.zero_count;
    j["rational_warning"] = rep.rational_warning;
    json v = json::array();
    for (const auto& viol : rep.violations) {
        v.push_back({{"xi", lattice_json(viol.xi, rep.dim)}, {"abs_ndot", viol.abs_ndot}});
    }
    j["violations"] = v;
    return j;
}

json xi_sequence_json(const geometry::XiSequence& seq) {
    json j;
    j["dim"] = seq.dim;
    j["search_radius"] = seq.search_radius;
    j["truncated"] = seq.truncated;
    if (seq.truncated) j["first_unreachable_level"] = seq.first_unreachable_level;
    json e = json::array();
    for (const auto& entry : seq.entries) {
        e.push_back({{"level", entry.level},
                     {"xi", lattice_json(entry.xi, seq.dim)},
                     {"abs_ndot", entry.abs_ndot},
                     {"norm", entry.norm}});
    }
    j["entries"] = e;
    return j;
}

json witness_json(const asymptotics::SlowWitness& witness,
                  const asymptotics::WitnessReport& report) {
    json j;
    j["l"] = witness.l;
    j["variant"] = witness.variant == asymptotics::WitnessVariant::L2 ? "L2" : "Linf";
    j["m_start"] = witness.m_start;
    j["all_pass"] = report.all_pass;
    json rows = json::array();
    for (const auto& r : report.rows) {
        rows.push_back({{"level", r.level},
                        {"t", r.t},
                        {"log_value", r.log_value},
                        {"log_threshold", r.log_threshold},
                        {"log_paper_bound", r.log_paper_bound},
                        {"margin", r.margin},
                        {"pass", r.pass}});
    }
    j["rows"] = rows;
    return j;
}

} // namespace blhomlab::io
