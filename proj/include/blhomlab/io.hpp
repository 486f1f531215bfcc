#pragma once

#include "blhomlab/asymptotics.hpp"
#include "blhomlab/blsolver.hpp"
#include "blhomlab/cell.hpp"
#include "blhomlab/geometry.hpp"

#include <nlohmann/json_fwd.hpp>

#include <filesystem>
#include <string>

namespace blhomlab::io {

/// Round-trip decimal formatting (%.17g); all file output goes through this
/// so reruns are byte-identical.
std::string fmt(double v);

std::string sha256_hex(const std::string& bytes);

void write_file(const std::filesystem::path& path, const std::string& content);

// CSV contracts --------------------------------------------------------------

/// Columns: xi1,xi2[,xi3],abs_Ndot_xi,norm_xi,violates. Rows: the worst vector
/// followed by every violation.
std::string diophantine_csv(const geometry::DiophantineReport& rep);
std::string xi_sequence_csv(const geometry::XiSequence& seq);

/// Columns: theta1,theta2,t,V (strip fields write theta2 = 0).
std::string grid_field_csv(const blsolver::GridField& field);

/// Columns: t,l2,linf.
std::string decay_csv(const std::vector<asymptotics::DecaySample>& samples);

/// Columns: M,xi1,xi2,absNdotxi,tM,value,threshold,pass.
std::string witness_csv(const asymptotics::SlowWitness& witness,
                        const asymptotics::WitnessReport& report);

/// Columns: eps,interior_linf.
std::string sweep_csv(const blsolver::SweepReport& rep);

/// Columns: a,tail,uncertainty.
std::string offsets_csv(const asymptotics::OffsetReport& rep);

/// Columns: radius,window_mean,gap.
std::string ergodic_csv(const asymptotics::ErgodicReport& rep);

/// One file per corrector field (row-major, header "# grid=<n> field=<name>")
/// plus summary.json with A0 and residuals. Returns the files written,
/// relative to dir.
std::vector<std::string> write_corrector_dir(const std::filesystem::path& dir,
                                             const cell::CorrectorSet& set);

// JSON mirrors ---------------------------------------------------------------

nlohmann::json diophantine_json(const geometry::DiophantineReport& rep);
nlohmann::json xi_sequence_json(const geometry::XiSequence& seq);
nlohmann::json witness_json(const asymptotics::SlowWitness& witness,
                            const asymptotics::WitnessReport& report);

} // namespace blhomlab::io
