#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "evdet/evaluate.hpp"
#include "evdet/simulate.hpp"
#include "evdet/types.hpp"

namespace evdet {

// JSON Lines persistence for the pipeline's file formats. Field names are
// documented in the README. Output is deterministic: keys serialize in
// sorted order and no timestamps or host state are embedded.

std::string record_to_jsonl(const FrameRecord& rec);
FrameRecord record_from_jsonl(const std::string& line, int line_no = 0);

std::string actor_to_jsonl(const ActorProfile& actor);

void write_records(std::ostream& os, const std::vector<FrameRecord>& records);
void write_records_file(const std::string& path, const std::vector<FrameRecord>& records);
std::vector<FrameRecord> read_records(std::istream& is, const std::string& name);
std::vector<FrameRecord> read_records_file(const std::string& path);

void write_actors_file(const std::string& path, const std::vector<ActorProfile>& actors);

std::string report_to_json(const EvalReport& report, bool include_curve = true);
void write_report_file(const std::string& path, const EvalReport& report);
EvalReport read_report_file(const std::string& path);

}  // namespace evdet
