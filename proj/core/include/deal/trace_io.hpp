#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include "deal/objective.hpp"

namespace deal {

/// Column order of the trace CSV; the header row is mandatory.
inline constexpr const char* kTraceCsvHeader = "k,f,grad_norm,step,inner_count,displacement";

/// Shortest decimal representation that round-trips the double exactly.
std::string format_double(double v);

void write_trace_csv(std::ostream& out, const IterateTrace& trace);
/// Parses the records of a trace CSV. Metadata (rho, theta, ...) lives in the sidecar.
IterateTrace read_trace_csv(std::istream& in);

/// JSON sidecar with the run metadata: seed, digest, solver, certified constants, flags.
std::string trace_sidecar_json(const IterateTrace& trace);
/// Applies sidecar metadata onto a trace read from CSV.
void apply_trace_sidecar(IterateTrace& trace, const std::string& json_text);

/// Stored iterates as CSV: k,x0,x1,...
void write_iterates_csv(std::ostream& out, const IterateTrace& trace);
/// Attaches iterates to the records with matching k.
void read_iterates_csv(std::istream& in, IterateTrace& trace);

void save_trace(const std::filesystem::path& csv_path, const IterateTrace& trace);
IterateTrace load_trace(const std::filesystem::path& csv_path);

}  // namespace deal
