#include "mitlsynth/json_out.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "mitlsynth/error.hpp"

namespace mitlsynth {

std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::RegionMisaligned: return "RegionMisaligned";
    case Errc::EmptyPartition: return "EmptyPartition";
    case Errc::InvalidGeometry: return "InvalidGeometry";
    case Errc::Infeasible: return "Infeasible";
    case Errc::VelocityVanishes: return "VelocityVanishes";
    case Errc::SyntaxError: return "SyntaxError";
    case Errc::IntervalError: return "IntervalError";
    case Errc::UnsupportedFragment: return "UnsupportedFragment";
    case Errc::SchemaError: return "SchemaError";
    case Errc::DanglingReference: return "DanglingReference";
    case Errc::AlphabetMismatch: return "AlphabetMismatch";
    case Errc::EmptyProduct: return "EmptyProduct";
    case Errc::NoAcceptingRun: return "NoAcceptingRun";
    case Errc::DepthExceeded: return "DepthExceeded";
    case Errc::BoundViolated: return "BoundViolated";
    case Errc::Escape: return "Escape";
    case Errc::MissingArtifact: return "MissingArtifact";
    case Errc::Io: return "Io";
  }
  return "Unknown";
}

std::string format_real(double v) {
  if (!std::isfinite(v)) return "null";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

void emit(std::ostringstream& os, const ordered_json& j, int indent) {
  const std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
  const std::string inner(static_cast<std::size_t>(indent + 1) * 2, ' ');
  switch (j.type()) {
    case ordered_json::value_t::object: {
      if (j.empty()) {
        os << "{}";
        return;
      }
      os << "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) os << ",\n";
        first = false;
        os << inner << ordered_json(it.key()).dump() << ": ";
        emit(os, it.value(), indent + 1);
      }
      os << "\n" << pad << "}";
      return;
    }
    case ordered_json::value_t::array: {
      if (j.empty()) {
        os << "[]";
        return;
      }
      // Arrays of scalars stay on one line; nested structures get one item per line.
      bool flat = true;
      for (const auto& e : j)
        if (e.is_structured()) flat = false;
      if (flat) {
        os << "[";
        for (std::size_t i = 0; i < j.size(); ++i) {
          if (i) os << ", ";
          emit(os, j[i], indent + 1);
        }
        os << "]";
        return;
      }
      os << "[\n";
      for (std::size_t i = 0; i < j.size(); ++i) {
        if (i) os << ",\n";
        os << inner;
        emit(os, j[i], indent + 1);
      }
      os << "\n" << pad << "]";
      return;
    }
    case ordered_json::value_t::number_float:
      os << format_real(j.get<double>());
      return;
    default:
      os << j.dump();
  }
}

}  // namespace

std::string dump_json(const ordered_json& j) {
  std::ostringstream os;
  emit(os, j, 0);
  os << "\n";
  return os.str();
}

void write_json_file(const std::string& path, const ordered_json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::Io, "cannot open " + path + " for writing");
  out << dump_json(j);
}

}  // namespace mitlsynth
