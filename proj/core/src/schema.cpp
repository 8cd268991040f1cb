#include <algorithm>
#include <cctype>
#include <string>

#include "evofs/data.hpp"
#include "evofs/error.hpp"

namespace evofs::data {

namespace {

// Column layout of the CIC-DDoS2019 CSV exports (CICFlowMeter-V3 plus the
// dataset's own index, SimillarHTTP and Inbound columns). The misspelling of
// "SimillarHTTP" is the published one.
const std::vector<std::string> kDdos2019Columns = {
    "Unnamed: 0", "Flow ID", "Source IP", "Source Port", "Destination IP",
    "Destination Port", "Protocol", "Timestamp", "Flow Duration",
    "Total Fwd Packets", "Total Backward Packets", "Total Length of Fwd Packets",
    "Total Length of Bwd Packets", "Fwd Packet Length Max", "Fwd Packet Length Min",
    "Fwd Packet Length Mean", "Fwd Packet Length Std", "Bwd Packet Length Max",
    "Bwd Packet Length Min", "Bwd Packet Length Mean", "Bwd Packet Length Std",
    "Flow Bytes/s", "Flow Packets/s", "Flow IAT Mean", "Flow IAT Std",
    "Flow IAT Max", "Flow IAT Min", "Fwd IAT Total", "Fwd IAT Mean", "Fwd IAT Std",
    "Fwd IAT Max", "Fwd IAT Min", "Bwd IAT Total", "Bwd IAT Mean", "Bwd IAT Std",
    "Bwd IAT Max", "Bwd IAT Min", "Fwd PSH Flags", "Bwd PSH Flags", "Fwd URG Flags",
    "Bwd URG Flags", "Fwd Header Length", "Bwd Header Length", "Fwd Packets/s",
    "Bwd Packets/s", "Min Packet Length", "Max Packet Length", "Packet Length Mean",
    "Packet Length Std", "Packet Length Variance", "FIN Flag Count",
    "SYN Flag Count", "RST Flag Count", "PSH Flag Count", "ACK Flag Count",
    "URG Flag Count", "CWE Flag Count", "ECE Flag Count", "Down/Up Ratio",
    "Average Packet Size", "Avg Fwd Segment Size", "Avg Bwd Segment Size",
    "Fwd Header Length.1", "Fwd Avg Bytes/Bulk", "Fwd Avg Packets/Bulk",
    "Fwd Avg Bulk Rate", "Bwd Avg Bytes/Bulk", "Bwd Avg Packets/Bulk",
    "Bwd Avg Bulk Rate", "Subflow Fwd Packets", "Subflow Fwd Bytes",
    "Subflow Bwd Packets", "Subflow Bwd Bytes", "Init_Win_bytes_forward",
    "Init_Win_bytes_backward", "act_data_pkt_fwd", "min_seg_size_forward",
    "Active Mean", "Active Std", "Active Max", "Active Min", "Idle Mean",
    "Idle Std", "Idle Max", "Idle Min", "SimillarHTTP", "Inbound", "Label",
};

// CSE-CIC-IDS2018 processed traffic (CICFlowMeter-V3 abbreviated names).
const std::vector<std::string> kIds2018Columns = {
    "Dst Port", "Protocol", "Timestamp", "Flow Duration", "Tot Fwd Pkts",
    "Tot Bwd Pkts", "TotLen Fwd Pkts", "TotLen Bwd Pkts", "Fwd Pkt Len Max",
    "Fwd Pkt Len Min", "Fwd Pkt Len Mean", "Fwd Pkt Len Std", "Bwd Pkt Len Max",
    "Bwd Pkt Len Min", "Bwd Pkt Len Mean", "Bwd Pkt Len Std", "Flow Byts/s",
    "Flow Pkts/s", "Flow IAT Mean", "Flow IAT Std", "Flow IAT Max", "Flow IAT Min",
    "Fwd IAT Tot", "Fwd IAT Mean", "Fwd IAT Std", "Fwd IAT Max", "Fwd IAT Min",
    "Bwd IAT Tot", "Bwd IAT Mean", "Bwd IAT Std", "Bwd IAT Max", "Bwd IAT Min",
    "Fwd PSH Flags", "Bwd PSH Flags", "Fwd URG Flags", "Bwd URG Flags",
    "Fwd Header Len", "Bwd Header Len", "Fwd Pkts/s", "Bwd Pkts/s", "Pkt Len Min",
    "Pkt Len Max", "Pkt Len Mean", "Pkt Len Std", "Pkt Len Var", "FIN Flag Cnt",
    "SYN Flag Cnt", "RST Flag Cnt", "PSH Flag Cnt", "ACK Flag Cnt", "URG Flag Cnt",
    "CWE Flag Count", "ECE Flag Cnt", "Down/Up Ratio", "Pkt Size Avg",
    "Fwd Seg Size Avg", "Bwd Seg Size Avg", "Fwd Byts/b Avg", "Fwd Pkts/b Avg",
    "Fwd Blk Rate Avg", "Bwd Byts/b Avg", "Bwd Pkts/b Avg", "Bwd Blk Rate Avg",
    "Subflow Fwd Pkts", "Subflow Fwd Byts", "Subflow Bwd Pkts", "Subflow Bwd Byts",
    "Init Fwd Win Byts", "Init Bwd Win Byts", "Fwd Act Data Pkts",
    "Fwd Seg Size Min", "Active Mean", "Active Std", "Active Max", "Active Min",
    "Idle Mean", "Idle Std", "Idle Max", "Idle Min", "Label",
};

std::vector<Schema> make_registry() {
  std::vector<Schema> registry;
  registry.push_back(Schema{DatasetKind::kGeneric,
                            {"Label"},
                            {},
                            {"Unnamed: 0", "Flow ID", "Source IP", "Src IP", "Destination IP",
                             "Dst IP", "Timestamp", "SimillarHTTP", "SimilarHTTP"},
                            "Label"});
  registry.push_back(Schema{
      DatasetKind::kCicDdos2019,
      kDdos2019Columns,
      {},
      {"Unnamed: 0", "Flow ID", "Source IP", "Destination IP", "Timestamp",
       "SimillarHTTP", "SimilarHTTP"},
      "Label"});
  registry.push_back(Schema{
      DatasetKind::kCseCicIds2018,
      kIds2018Columns,
      {"Flow ID", "Src IP", "Src Port", "Dst IP"},
      {"Flow ID", "Src IP", "Dst IP", "Timestamp"},
      "Label"});
  return registry;
}

bool contains(const std::vector<std::string>& v, const std::string& s) {
  return std::find(v.begin(), v.end(), s) != v.end();
}

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (const auto& s : v) {
    if (!out.empty()) out += ", ";
    out += '"' + s + '"';
  }
  return out;
}

}  // namespace

DatasetKind parse_kind(std::string_view name) {
  std::string lowered(name);
  std::transform(lowered.begin(), lowered.end(), lowered.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lowered == "generic") return DatasetKind::kGeneric;
  if (lowered == "cic-ddos2019" || lowered == "ddos2019") return DatasetKind::kCicDdos2019;
  if (lowered == "cse-cic-ids2018" || lowered == "ids2018") {
    return DatasetKind::kCseCicIds2018;
  }
  throw Error(ErrorKind::kUsage, "unknown dataset kind '" + std::string(name) +
                                     "' (expected generic, cic-ddos2019, cse-cic-ids2018)");
}

std::string_view to_string(DatasetKind kind) noexcept {
  switch (kind) {
    case DatasetKind::kGeneric: return "generic";
    case DatasetKind::kCicDdos2019: return "cic-ddos2019";
    case DatasetKind::kCseCicIds2018: return "cse-cic-ids2018";
  }
  return "generic";
}

const Schema& schema_for(DatasetKind kind) {
  static const std::vector<Schema> registry = make_registry();
  for (const auto& s : registry) {
    if (s.kind == kind) return s;
  }
  return registry.front();
}

std::string normalize_column_name(std::string_view name) {
  const auto first = name.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = name.find_last_not_of(" \t\r\n");
  return std::string(name.substr(first, last - first + 1));
}

void check_header(const std::vector<std::string>& header, DatasetKind kind) {
  const Schema& schema = schema_for(kind);
  std::vector<std::string> missing;
  for (const auto& name : schema.required) {
    if (!contains(header, name)) missing.push_back(name);
  }
  std::vector<std::string> extra;
  std::vector<std::string> seen;
  std::vector<std::string> duplicated;
  for (const auto& name : header) {
    if (contains(seen, name)) duplicated.push_back(name);
    seen.push_back(name);
    if (kind == DatasetKind::kGeneric) continue;
    if (!contains(schema.required, name) && !contains(schema.optional, name)) {
      extra.push_back(name);
    }
  }
  if (missing.empty() && extra.empty() && duplicated.empty()) return;

  std::string msg = "header does not match the " + std::string(to_string(kind)) +
                    " layout (" + std::to_string(schema.required.size()) +
                    " columns expected, " + std::to_string(header.size()) + " found)";
  if (!missing.empty()) msg += "; missing: " + join(missing);
  if (!extra.empty()) msg += "; unexpected: " + join(extra);
  if (!duplicated.empty()) msg += "; duplicated: " + join(duplicated);
  throw Error(ErrorKind::kSchema, msg);
}

}  // namespace evofs::data
