#include "evdet/jsonl.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace evdet {

using nlohmann::json;

namespace {

json crop_to_json(const CropRegion& c) {
    json j;
    j["u"] = c.center_u;
    j["v"] = c.center_v;
    j["side"] = c.side;
    j["valid"] = c.valid;
    if (!c.valid) j["reason"] = to_string(c.reason);
    return j;
}

CropRegion crop_from_json(const json& j) {
    CropRegion c;
    c.center_u = j.at("u").get<double>();
    c.center_v = j.at("v").get<double>();
    c.side = j.at("side").get<double>();
    c.valid = j.at("valid").get<bool>();
    c.reason = c.valid ? InvalidReason::none
                       : invalid_reason_from_string(j.value("reason", ""));
    return c;
}

json box_to_json(const BoxState& b) {
    json j;
    j["x"] = b.x;
    j["y"] = b.y;
    j["z"] = b.z;
    j["l"] = b.length;
    j["w"] = b.width;
    j["h"] = b.height;
    j["yaw"] = b.yaw;
    return j;
}

BoxState box_from_json(const json& j) {
    BoxState b;
    b.x = j.at("x").get<double>();
    b.y = j.at("y").get<double>();
    b.z = j.at("z").get<double>();
    b.length = j.at("l").get<double>();
    b.width = j.at("w").get<double>();
    b.height = j.at("h").get<double>();
    b.yaw = j.at("yaw").get<double>();
    return b;
}

}  // namespace

std::string record_to_jsonl(const FrameRecord& rec) {
    json j;
    j["scene"] = rec.scene_id;
    j["track"] = rec.track_id;
    j["frame"] = rec.frame_index;
    j["t"] = rec.timestamp;
    j["type"] = to_string(rec.type);
    j["active"] = rec.is_active;
    j["bulb_on"] = rec.bulb_on;
    if (rec.confounder) j["confounder"] = true;
    j["box"] = box_to_json(rec.box);
    j["crop"] = crop_to_json(rec.crop);
    j["split"] = to_string(rec.split);
    if (rec.score.has_value()) j["score"] = *rec.score;
    if (rec.augmented) j["augmented"] = true;
    if (!rec.mined_from.empty()) j["mined_from"] = rec.mined_from;
    return j.dump();
}

FrameRecord record_from_jsonl(const std::string& line, int line_no) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::exception& e) {
        throw DataError("records line " + std::to_string(line_no) + ": " + e.what());
    }
    try {
        FrameRecord r;
        r.scene_id = j.at("scene").get<std::string>();
        r.track_id = j.at("track").get<std::int64_t>();
        r.frame_index = j.at("frame").get<int>();
        r.timestamp = j.at("t").get<double>();
        r.type = vehicle_type_from_string(j.at("type").get<std::string>());
        r.is_active = j.at("active").get<bool>();
        r.bulb_on = j.at("bulb_on").get<bool>();
        r.confounder = j.value("confounder", false);
        r.box = box_from_json(j.at("box"));
        r.crop = crop_from_json(j.at("crop"));
        r.split = split_from_string(j.value("split", "train"));
        if (j.contains("score")) r.score = j.at("score").get<double>();
        r.augmented = j.value("augmented", false);
        r.mined_from = j.value("mined_from", "");
        return r;
    } catch (const json::exception& e) {
        throw DataError("records line " + std::to_string(line_no) + ": " + e.what());
    }
}

std::string actor_to_jsonl(const ActorProfile& a) {
    json j;
    j["scene"] = a.scene_id;
    j["track"] = a.track_id;
    j["type"] = to_string(a.type);
    j["active"] = a.is_active;
    if (a.confounder) j["confounder"] = true;
    j["spawn"] = box_to_json(a.spawn);
    j["vx"] = a.vx;
    j["vz"] = a.vz;
    j["start_frame"] = a.start_frame;
    j["frame_count"] = a.frame_count;
    json p;
    p["mode"] = a.pattern.mode == FlashMode::periodic ? "periodic" : "bernoulli";
    p["period"] = a.pattern.period;
    p["all_off"] = a.pattern.target_all_off_fraction;
    p["phase"] = a.pattern.phase;
    j["pattern"] = p;
    return j.dump();
}

void write_records(std::ostream& os, const std::vector<FrameRecord>& records) {
    for (const FrameRecord& r : records) os << record_to_jsonl(r) << "\n";
}

void write_records_file(const std::string& path, const std::vector<FrameRecord>& records) {
    std::ofstream os(path);
    if (!os) throw DataError("cannot write records file: " + path);
    write_records(os, records);
    if (!os) throw DataError("failed writing records file: " + path);
}

std::vector<FrameRecord> read_records(std::istream& is, const std::string& name) {
    std::vector<FrameRecord> out;
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            out.push_back(record_from_jsonl(line, line_no));
        } catch (const DataError& e) {
            throw DataError(name + ": " + e.what());
        }
    }
    return out;
}

std::vector<FrameRecord> read_records_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw DataError("cannot open records file: " + path);
    return read_records(is, path);
}

void write_actors_file(const std::string& path, const std::vector<ActorProfile>& actors) {
    std::ofstream os(path);
    if (!os) throw DataError("cannot write actors file: " + path);
    for (const ActorProfile& a : actors) os << actor_to_jsonl(a) << "\n";
}

namespace {

json point_to_json(const PRPoint& p) {
    json j;
    j["threshold"] = p.threshold;
    j["precision"] = p.precision;
    j["recall"] = p.recall;
    j["f1"] = p.f1;
    j["tp"] = p.tp;
    j["fp"] = p.fp;
    j["fn"] = p.fn;
    j["tn"] = p.tn;
    return j;
}

PRPoint point_from_json(const json& j) {
    PRPoint p;
    p.threshold = j.at("threshold").get<double>();
    p.precision = j.at("precision").get<double>();
    p.recall = j.at("recall").get<double>();
    p.f1 = j.at("f1").get<double>();
    p.tp = j.at("tp").get<std::int64_t>();
    p.fp = j.at("fp").get<std::int64_t>();
    p.fn = j.at("fn").get<std::int64_t>();
    p.tn = j.at("tn").get<std::int64_t>();
    return p;
}

json opt_to_json(const std::optional<double>& v) {
    if (v.has_value()) return *v;
    return nullptr;
}

std::optional<double> opt_from_json(const json& j, const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<double>();
}

}  // namespace

std::string report_to_json(const EvalReport& report, bool include_curve) {
    json j;
    j["frames"] = report.frames;
    j["frame_positives"] = report.frame_positives;
    j["max_f1"] = report.max_f1;
    j["max_f1_threshold"] = report.max_f1_threshold;
    j["precision_at_recall_0.8"] = report.precision_at_recall_08;
    j["pct_change_convention"] = "relative";
    if (!report.baseline_name.empty()) {
        j["baseline"] = report.baseline_name;
        j["pct_max_f1"] = opt_to_json(report.pct_max_f1);
        j["pct_precision_at_recall_0.8"] = opt_to_json(report.pct_precision_at_recall_08);
    }
    if (include_curve) {
        json curve = json::array();
        for (const PRPoint& p : report.curve) curve.push_back(point_to_json(p));
        j["curve"] = curve;
    }
    json rows = json::array();
    for (const PerActorRow& r : report.per_actor) {
        json row;
        row["threshold_t"] = r.threshold_t;
        row["precision"] = r.precision;
        row["recall"] = r.recall;
        row["f1"] = r.f1;
        row["tp"] = r.tp;
        row["fp"] = r.fp;
        row["fn"] = r.fn;
        row["actors"] = r.actors;
        row["pct_precision"] = opt_to_json(r.pct_precision);
        row["pct_recall"] = opt_to_json(r.pct_recall);
        row["pct_f1"] = opt_to_json(r.pct_f1);
        rows.push_back(row);
    }
    j["per_actor"] = rows;
    return j.dump(2);
}

void write_report_file(const std::string& path, const EvalReport& report) {
    std::ofstream os(path);
    if (!os) throw DataError("cannot write report file: " + path);
    os << report_to_json(report) << "\n";
}

EvalReport read_report_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw DataError("cannot open report file: " + path);
    json j;
    try {
        is >> j;
    } catch (const json::exception& e) {
        throw DataError("report " + path + ": " + e.what());
    }
    try {
        EvalReport r;
        r.frames = j.at("frames").get<std::int64_t>();
        r.frame_positives = j.at("frame_positives").get<std::int64_t>();
        r.max_f1 = j.at("max_f1").get<double>();
        r.max_f1_threshold = j.at("max_f1_threshold").get<double>();
        r.precision_at_recall_08 = j.at("precision_at_recall_0.8").get<double>();
        if (j.contains("baseline")) {
            r.baseline_name = j.at("baseline").get<std::string>();
            r.pct_max_f1 = opt_from_json(j, "pct_max_f1");
            r.pct_precision_at_recall_08 = opt_from_json(j, "pct_precision_at_recall_0.8");
        }
        if (j.contains("curve")) {
            for (const json& p : j.at("curve")) r.curve.push_back(point_from_json(p));
        }
        for (const json& row : j.at("per_actor")) {
            PerActorRow pr;
            pr.threshold_t = row.at("threshold_t").get<double>();
            pr.precision = row.at("precision").get<double>();
            pr.recall = row.at("recall").get<double>();
            pr.f1 = row.at("f1").get<double>();
            pr.tp = row.at("tp").get<std::int64_t>();
            pr.fp = row.at("fp").get<std::int64_t>();
            pr.fn = row.at("fn").get<std::int64_t>();
            pr.actors = row.at("actors").get<std::int64_t>();
            pr.pct_precision = opt_from_json(row, "pct_precision");
            pr.pct_recall = opt_from_json(row, "pct_recall");
            pr.pct_f1 = opt_from_json(row, "pct_f1");
            r.per_actor.push_back(pr);
        }
        return r;
    } catch (const json::exception& e) {
        throw DataError("report " + path + ": " + e.what());
    }
}

}  // namespace evdet
