#include "trustfed/io.hpp"

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace trustfed {

using nlohmann::json;

namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

} // namespace

std::string population_to_csv(const std::vector<DeviceProfile>& devices) {
    std::ostringstream out;
    out << "id,type,cpu,memory,diskspace,battery,availability,area,avg_movements,avg_finish_time\n";
    for (const auto& d : devices) {
        out << d.id << ',' << d.device_type << ',' << fmt_double(d.cpu) << ','
            << fmt_double(d.memory) << ',' << fmt_double(d.diskspace) << ','
            << fmt_double(d.battery) << ',' << fmt_double(d.availability) << ',' << d.area << ','
            << fmt_double(d.avg_movements) << ',' << fmt_double(d.avg_finish_time) << '\n';
    }
    return out.str();
}

std::vector<DeviceProfile> population_from_csv(const std::string& text) {
    std::vector<DeviceProfile> out;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1 || line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 10)
            throw Error("malformed-row", "line " + std::to_string(line_no) + ": expected 10 fields");
        try {
            DeviceProfile d;
            d.id = f[0];
            d.device_type = f[1];
            d.cpu = std::stod(f[2]);
            d.memory = std::stod(f[3]);
            d.diskspace = std::stod(f[4]);
            d.battery = std::stod(f[5]);
            d.availability = std::stod(f[6]);
            d.area = std::stoi(f[7]);
            d.avg_movements = std::stod(f[8]);
            d.avg_finish_time = std::stod(f[9]);
            out.push_back(std::move(d));
        } catch (const std::exception&) {
            throw Error("malformed-row", "line " + std::to_string(line_no) + ": bad number");
        }
    }
    return out;
}

std::string utilities_to_csv(const std::vector<DeviceProfile>& devices,
                             const std::vector<LearningUtility>& utilities) {
    std::ostringstream out;
    out << "id,cpu_cost,memory_cost,battery_cost,diskspace_cost\n";
    for (std::size_t i = 0; i < utilities.size(); ++i) {
        out << (i < devices.size() ? devices[i].id : std::to_string(i)) << ','
            << fmt_double(utilities[i].cpu_cost) << ',' << fmt_double(utilities[i].memory_cost)
            << ',' << fmt_double(utilities[i].battery_cost) << ','
            << fmt_double(utilities[i].diskspace_cost) << '\n';
    }
    return out.str();
}

std::vector<std::pair<std::string, LearningUtility>> utilities_from_csv(const std::string& text) {
    std::vector<std::pair<std::string, LearningUtility>> out;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1 || line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 5)
            throw Error("malformed-row", "line " + std::to_string(line_no) + ": expected 5 fields");
        try {
            LearningUtility u;
            u.cpu_cost = std::stod(f[1]);
            u.memory_cost = std::stod(f[2]);
            u.battery_cost = std::stod(f[3]);
            u.diskspace_cost = std::stod(f[4]);
            out.emplace_back(f[0], u);
        } catch (const std::exception&) {
            throw Error("malformed-row", "line " + std::to_string(line_no) + ": bad number");
        }
    }
    return out;
}

namespace {

json to_json(const DeviceProfile& d) {
    return json{{"id", d.id},
                {"type", d.device_type},
                {"cpu", d.cpu},
                {"memory", d.memory},
                {"diskspace", d.diskspace},
                {"battery", d.battery},
                {"availability", d.availability},
                {"area", d.area},
                {"avg_movements", d.avg_movements},
                {"avg_finish_time", d.avg_finish_time},
                {"joined_round", d.joined_round}};
}

DeviceProfile device_from_json(const json& j) {
    DeviceProfile d;
    d.id = j.at("id").get<std::string>();
    d.device_type = j.at("type").get<std::string>();
    d.cpu = j.at("cpu").get<double>();
    d.memory = j.at("memory").get<double>();
    d.diskspace = j.at("diskspace").get<double>();
    d.battery = j.at("battery").get<double>();
    d.availability = j.at("availability").get<double>();
    d.area = j.at("area").get<int>();
    d.avg_movements = j.at("avg_movements").get<double>();
    d.avg_finish_time = j.at("avg_finish_time").get<double>();
    d.joined_round = j.at("joined_round").get<int>();
    return d;
}

} // namespace

std::string device_profile_to_json(const DeviceProfile& profile) {
    return to_json(profile).dump();
}

DeviceProfile device_profile_from_json(const std::string& text) {
    return device_from_json(json::parse(text));
}

std::string trust_record_to_json(const TrustRecord& record) {
    json j;
    j["success_count"] = record.success_count;
    j["deployed_count"] = record.deployed_count;
    j["accuracy_history"] = std::vector<double>(record.accuracy_history.begin(),
                                                record.accuracy_history.end());
    json past = json::object();
    for (const auto& [round, acc] : record.past_accuracy) past[std::to_string(round)] = acc;
    j["past_accuracy"] = past;
    j["previous_neighbors"] = record.previous_neighbors;
    j["abnormal_counts"] =
        std::vector<int>(record.abnormal_counts.begin(), record.abnormal_counts.end());
    j["group_common_neighbors"] = record.group_common_neighbors;
    j["contradiction_count"] = record.contradiction_count;
    j["trust"] = record.trust;
    return j.dump();
}

TrustRecord trust_record_from_json(const std::string& text) {
    const json j = json::parse(text);
    TrustRecord r;
    r.success_count = j.at("success_count").get<long>();
    r.deployed_count = j.at("deployed_count").get<long>();
    for (double v : j.at("accuracy_history")) r.accuracy_history.push_back(v);
    for (const auto& [key, value] : j.at("past_accuracy").items())
        r.past_accuracy[std::stoi(key)] = value.get<double>();
    for (const auto& v : j.at("previous_neighbors"))
        r.previous_neighbors.insert(v.get<std::string>());
    for (int v : j.at("abnormal_counts")) r.abnormal_counts.push_back(v);
    r.group_common_neighbors = j.at("group_common_neighbors").get<int>();
    r.contradiction_count = j.at("contradiction_count").get<int>();
    r.trust = j.at("trust").get<double>();
    return r;
}

std::string traces_to_jsonl(const std::vector<RoundTrace>& traces) {
    std::ostringstream out;
    for (const auto& t : traces) {
        json j;
        j["round"] = t.round;
        j["selected_ids"] = t.selected_ids;
        j["dismissed"] = t.dismissed;
        j["dismiss_cause"] = t.dismiss_cause;
        j["global_accuracy"] = t.global_accuracy;
        json clients = json::array();
        for (const auto& c : t.per_client) {
            json e;
            e["id"] = c.id;
            e["trust"] = c.trust;
            e["tr1"] = c.tr1;
            e["tr2_norm"] = c.tr2_norm;
            e["tr3_norm"] = c.tr3_norm;
            e["tr4_norm"] = c.tr4_norm;
            if (c.local_accuracy)
                e["local_accuracy"] = *c.local_accuracy;
            else
                e["local_accuracy"] = nullptr;
            e["flagged"] = c.flagged;
            e["selected"] = c.selected;
            e["malicious"] = c.malicious;
            clients.push_back(std::move(e));
        }
        j["per_client"] = std::move(clients);
        out << j.dump() << '\n';
    }
    return out.str();
}

std::vector<RoundTrace> traces_from_jsonl(const std::string& text) {
    std::vector<RoundTrace> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const json j = json::parse(line);
        RoundTrace t;
        t.round = j.at("round").get<int>();
        t.selected_ids = j.at("selected_ids").get<std::vector<std::string>>();
        t.dismissed = j.at("dismissed").get<bool>();
        t.dismiss_cause = j.at("dismiss_cause").get<std::string>();
        t.global_accuracy = j.at("global_accuracy").get<double>();
        for (const auto& e : j.at("per_client")) {
            RoundTrace::ClientEntry c;
            c.id = e.at("id").get<std::string>();
            c.trust = e.at("trust").get<double>();
            c.tr1 = e.at("tr1").get<double>();
            c.tr2_norm = e.at("tr2_norm").get<double>();
            c.tr3_norm = e.at("tr3_norm").get<double>();
            c.tr4_norm = e.at("tr4_norm").get<double>();
            if (!e.at("local_accuracy").is_null())
                c.local_accuracy = e.at("local_accuracy").get<double>();
            c.flagged = e.at("flagged").get<bool>();
            c.selected = e.at("selected").get<bool>();
            c.malicious = e.at("malicious").get<bool>();
            t.per_client.push_back(std::move(c));
        }
        out.push_back(std::move(t));
    }
    return out;
}

std::string trust_log_to_jsonl(const std::vector<TrustLogEntry>& log) {
    std::ostringstream out;
    for (const auto& e : log) {
        json j;
        j["round"] = e.round;
        j["id"] = e.client_id;
        j["tr1"] = e.tr1;
        j["tr2_norm"] = e.tr2_norm;
        j["tr3_norm"] = e.tr3_norm;
        j["tr4_norm"] = e.tr4_norm;
        j["tr2_count"] = e.tr2_count;
        j["abnormal_avg"] = e.abnormal_avg;
        j["trust"] = e.trust;
        j["area"] = e.area;
        j["type"] = e.device_type;
        j["cpu"] = e.cpu;
        j["memory"] = e.memory;
        j["avg_movements"] = e.avg_movements;
        out << j.dump() << '\n';
    }
    return out.str();
}

std::vector<TrustLogEntry> trust_log_from_jsonl(const std::string& text) {
    std::vector<TrustLogEntry> out;
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const json j = json::parse(line);
        TrustLogEntry e;
        e.round = j.at("round").get<int>();
        e.client_id = j.at("id").get<std::string>();
        e.tr1 = j.at("tr1").get<double>();
        e.tr2_norm = j.at("tr2_norm").get<double>();
        e.tr3_norm = j.at("tr3_norm").get<double>();
        e.tr4_norm = j.at("tr4_norm").get<double>();
        e.tr2_count = j.at("tr2_count").get<int>();
        e.abnormal_avg = j.at("abnormal_avg").get<double>();
        e.trust = j.at("trust").get<double>();
        e.area = j.at("area").get<int>();
        e.device_type = j.at("type").get<std::string>();
        e.cpu = j.at("cpu").get<double>();
        e.memory = j.at("memory").get<double>();
        e.avg_movements = j.at("avg_movements").get<double>();
        out.push_back(std::move(e));
    }
    return out;
}

std::string summary_to_csv(const std::vector<RoundTrace>& traces) {
    std::ostringstream out;
    out << "round,global_accuracy,mean_trust_honest,mean_trust_malicious,selected_count,dismissed\n";
    for (const auto& t : traces) {
        double honest = 0.0, malicious = 0.0;
        long honest_n = 0, malicious_n = 0;
        for (const auto& c : t.per_client) {
            if (c.malicious) {
                malicious += c.trust;
                ++malicious_n;
            } else {
                honest += c.trust;
                ++honest_n;
            }
        }
        out << t.round << ',' << fmt_double(t.global_accuracy) << ','
            << fmt_double(honest_n ? honest / honest_n : 0.0) << ','
            << fmt_double(malicious_n ? malicious / malicious_n : 0.0) << ','
            << t.selected_ids.size() << ',' << (t.dismissed ? 1 : 0) << '\n';
    }
    return out.str();
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("io", "cannot open " + path);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

void write_file_atomic(const std::string& path,
                       const std::function<void(std::ostream&)>& producer) {
    namespace fs = std::filesystem;
    const fs::path target(path);
    if (target.has_parent_path()) fs::create_directories(target.parent_path());
    const fs::path tmp = target.parent_path() / (target.filename().string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("io", "cannot open " + tmp.string());
        try {
            producer(out);
            out.flush();
            if (!out) throw Error("io", "write failed for " + tmp.string());
        } catch (...) {
            out.close();
            std::error_code ec;
            fs::remove(tmp, ec);
            throw;
        }
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw Error("io", "cannot rename into " + path);
    }
}

void write_file_atomic(const std::string& path, const std::string& content) {
    write_file_atomic(path, [&](std::ostream& out) { out << content; });
}

namespace {

// Compact SHA-1, enough for content hashes of config files.
struct Sha1 {
    std::uint32_t h[5] = {0x67452301u, 0xEFCDAB89u, 0x98BADCFEu, 0x10325476u, 0xC3D2E1F0u};
    std::uint64_t total = 0;
    unsigned char block[64];
    std::size_t fill = 0;

    static std::uint32_t rol(std::uint32_t v, int s) { return (v << s) | (v >> (32 - s)); }

    void process(const unsigned char* p) {
        std::uint32_t w[80];
        for (int i = 0; i < 16; ++i)
            w[i] = (std::uint32_t(p[4 * i]) << 24) | (std::uint32_t(p[4 * i + 1]) << 16) |
                   (std::uint32_t(p[4 * i + 2]) << 8) | std::uint32_t(p[4 * i + 3]);
        for (int i = 16; i < 80; ++i)
            w[i] = rol(w[i - 3] ^ w[i - 8] ^ w[i - 14] ^ w[i - 16], 1);
        std::uint32_t a = h[0], b = h[1], c = h[2], d = h[3], e = h[4];
        for (int i = 0; i < 80; ++i) {
            std::uint32_t f, k;
            if (i < 20) {
                f = (b & c) | (~b & d);
                k = 0x5A827999u;
            } else if (i < 40) {
                f = b ^ c ^ d;
                k = 0x6ED9EBA1u;
            } else if (i < 60) {
                f = (b & c) | (b & d) | (c & d);
                k = 0x8F1BBCDCu;
            } else {
                f = b ^ c ^ d;
                k = 0xCA62C1D6u;
            }
            const std::uint32_t t = rol(a, 5) + f + e + k + w[i];
            e = d;
            d = c;
            c = rol(b, 30);
            b = a;
            a = t;
        }
        h[0] += a;
        h[1] += b;
        h[2] += c;
        h[3] += d;
        h[4] += e;
    }

    void update(const unsigned char* data, std::size_t len) {
        total += len;
        while (len > 0) {
            const std::size_t take = std::min<std::size_t>(64 - fill, len);
            std::copy(data, data + take, block + fill);
            fill += take;
            data += take;
            len -= take;
            if (fill == 64) {
                process(block);
                fill = 0;
            }
        }
    }

    std::string finish() {
        const std::uint64_t bits = total * 8;
        const unsigned char pad = 0x80;
        update(&pad, 1);
        const unsigned char zero = 0;
        while (fill != 56) update(&zero, 1);
        unsigned char len[8];
        for (int i = 0; i < 8; ++i) len[i] = static_cast<unsigned char>(bits >> (56 - 8 * i));
        update(len, 8);
        char hex[41];
        for (int i = 0; i < 5; ++i) std::snprintf(hex + 8 * i, 9, "%08x", h[i]);
        return std::string(hex, 40);
    }
};

} // namespace

std::string git_blob_sha1(const std::string& bytes) {
    Sha1 sha;
    const std::string header = "blob " + std::to_string(bytes.size()) + '\0';
    sha.update(reinterpret_cast<const unsigned char*>(header.data()), header.size());
    sha.update(reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size());
    return sha.finish();
}

} // namespace trustfed
