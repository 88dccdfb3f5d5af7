#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "cfsim/engine.hpp"

namespace cfsim {

void write_trace_csv(const RunTrace& trace, std::ostream& out) {
  out << "t,user,item,feedback,phase,epoch\n";
  for (const auto& r : trace.records) {
    out << r.t << ',' << r.user << ',' << r.item << ',' << static_cast<int>(r.feedback) << ',' << phase_name(r.phase)
        << ',' << r.epoch << '\n';
  }
}

RunTrace read_trace_csv(std::istream& in, std::size_t n_users) {
  RunTrace trace;
  trace.n_users = n_users;
  std::string line;
  if (!std::getline(in, line) || line != "t,user,item,feedback,phase,epoch") {
    throw DataError("trace must start with the header t,user,item,feedback,phase,epoch");
  }
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string f[6];
    for (int k = 0; k < 6; ++k) {
      if (!std::getline(row, f[k], ',')) throw DataError("trace line " + std::to_string(lineno) + " has too few fields");
    }
    try {
      TraceRecord r;
      r.t = std::stoull(f[0]);
      r.user = static_cast<UserId>(std::stoul(f[1]));
      r.item = static_cast<ItemId>(std::stoul(f[2]));
      const int fb = std::stoi(f[3]);
      if (fb != 1 && fb != -1) throw DataError("feedback must be 1 or -1");
      r.feedback = static_cast<Rating>(fb);
      r.phase = phase_from_name(f[4]);
      r.epoch = static_cast<std::uint32_t>(std::stoul(f[5]));
      trace.records.push_back(r);
    } catch (const std::logic_error&) {
      throw DataError("trace line " + std::to_string(lineno) + " is malformed");
    } catch (const DataError& e) {
      throw DataError("trace line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return trace;
}

}  // namespace cfsim
