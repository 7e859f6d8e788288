#include "mug/labels.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <tuple>

#include "mug/error.hpp"

namespace mug::data {

namespace {

const std::vector<std::string>& llp_categories() {
    static const std::vector<std::string> names = {
        "Speech", "Car", "Cheering", "Dog", "Cat", "Frying_(food)", "Basketball_bounce", "Fire_alarm",
        "Chainsaw", "Cello", "Banjo", "Singing", "Chicken_rooster", "Violin_fiddle", "Vacuum_cleaner",
        "Baby_laughter", "Accordion", "Lawn_mower", "Motorcycle", "Helicopter", "Acoustic_guitar",
        "Telephone_bell_ringing", "Baby_cry_infant_cry", "Blender", "Clapping"};
    return names;
}

constexpr const char* kHeader = "video_id,modality,segment,labels";

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : s) {
        if (ch == sep) {
            out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(ch);
        }
    }
    out.push_back(std::move(cur));
    return out;
}

struct CsvRow {
    std::string video_id;
    Modality modality;
    std::size_t segment;
    std::string labels;
    std::size_t line;
};

// Shared row reader for label and patch CSVs; `visit` sees every data row.
template <typename Visit>
void read_rows(std::istream& in, std::size_t segments, const std::string& source, Visit&& visit) {
    std::string line;
    std::size_t lineno = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!header_seen) {
            if (line != kHeader) {
                throw ParseError(source + ":" + std::to_string(lineno) + ": expected header '" + kHeader + "'");
            }
            header_seen = true;
            continue;
        }
        if (line.empty()) continue;
        const auto where = [&] { return source + ":" + std::to_string(lineno) + ": "; };
        auto fields = split(line, ',');
        if (fields.size() != 4) throw ParseError(where() + "expected 4 fields, got " + std::to_string(fields.size()));
        if (fields[0].empty()) throw ParseError(where() + "empty video_id");
        Modality m;
        try {
            m = parse_modality(fields[1]);
        } catch (const ParseError& e) {
            throw ParseError(where() + e.what());
        }
        std::size_t seg = 0;
        std::size_t used = 0;
        try {
            seg = std::stoul(fields[2], &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == 0 || used != fields[2].size() || fields[2].front() == '-') {
            throw ParseError(where() + "bad segment '" + fields[2] + "'");
        }
        if (seg >= segments) {
            throw ParseError(where() + "segment " + std::to_string(seg) + " out of range [0," + std::to_string(segments) + ")");
        }
        visit(CsvRow{std::move(fields[0]), m, seg, std::move(fields[3]), lineno});
    }
    if (!header_seen) throw ParseError(source + ": missing header");
}

std::vector<std::size_t> parse_classes(const std::string& field, const Vocabulary& vocab, const std::string& where) {
    std::vector<std::size_t> out;
    if (field.empty()) return out;
    std::set<std::size_t> seen;
    for (const std::string& name : split(field, ';')) {
        if (!vocab.contains(name)) throw ParseError(where + "unknown category '" + name + "'");
        const std::size_t c = vocab.index(name);
        if (!seen.insert(c).second) throw ParseError(where + "category '" + name + "' repeated");
        out.push_back(c);
    }
    return out;
}

std::string join_classes(const std::vector<std::size_t>& classes, const Vocabulary& vocab) {
    std::string s;
    for (std::size_t i = 0; i < classes.size(); ++i) {
        if (i) s += ';';
        s += vocab.name(classes[i]);
    }
    return s;
}

std::ofstream open_for_write(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw FormatError("cannot write file '" + path.string() + "'");
    return out;
}

std::ifstream open_for_read(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open file '" + path.string() + "'");
    return in;
}

}  // namespace

Vocabulary::Vocabulary(std::vector<std::string> names) : names_(std::move(names)) {
    if (names_.empty()) throw VocabularyError("vocabulary is empty");
    for (std::size_t i = 0; i < names_.size(); ++i) {
        const std::string& n = names_[i];
        if (n.empty() || n.find_first_of(",;\n\r") != std::string::npos || n == "DISCARD") {
            throw VocabularyError("invalid category name '" + n + "'");
        }
        if (!lookup_.emplace(n, i).second) throw VocabularyError("duplicate category '" + n + "'");
    }
}

Vocabulary Vocabulary::standard(std::size_t classes) {
    const auto& all = llp_categories();
    if (classes == 0 || classes > all.size()) {
        throw ConfigError("class count must be in [1," + std::to_string(all.size()) + "], got " + std::to_string(classes));
    }
    return Vocabulary(std::vector<std::string>(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(classes)));
}

std::size_t Vocabulary::index(const std::string& name) const {
    auto it = lookup_.find(name);
    if (it == lookup_.end()) throw VocabularyError("unknown category '" + name + "'");
    return it->second;
}

LabelMatrix::LabelMatrix(std::size_t segments, std::size_t classes)
    : segments_(segments), classes_(classes), cells_(segments * classes, 0), null_(segments, 0) {}

void LabelMatrix::set(std::size_t t, std::size_t c, bool value) {
    if (t >= segments_ || c >= classes_) throw ShapeError("label cell out of range");
    cells_[t * classes_ + c] = value ? 1 : 0;
    null_[t] = 0;
}

void LabelMatrix::set_null(std::size_t t, bool value) {
    if (t >= segments_) throw ShapeError("label row out of range");
    null_[t] = value ? 1 : 0;
    if (value) std::fill_n(cells_.begin() + static_cast<std::ptrdiff_t>(t * classes_), classes_, 0);
}

std::size_t LabelMatrix::null_count() const {
    std::size_t n = 0;
    for (auto f : null_) n += f;
    return n;
}

bool LabelMatrix::row_empty(std::size_t t) const {
    for (std::size_t c = 0; c < classes_; ++c)
        if (get(t, c)) return false;
    return true;
}

std::vector<std::size_t> LabelMatrix::row_classes(std::size_t t) const {
    std::vector<std::size_t> out;
    for (std::size_t c = 0; c < classes_; ++c)
        if (get(t, c)) out.push_back(c);
    return out;
}

std::vector<std::uint8_t> LabelMatrix::column_any() const {
    std::vector<std::uint8_t> out(classes_, 0);
    for (std::size_t t = 0; t < segments_; ++t)
        for (std::size_t c = 0; c < classes_; ++c)
            if (get(t, c)) out[c] = 1;
    return out;
}

std::size_t LabelMatrix::positives() const {
    std::size_t n = 0;
    for (auto v : cells_) n += v;
    return n;
}

Tensor LabelMatrix::to_tensor() const {
    return Tensor::from_vector({segments_, classes_}, std::vector<double>(cells_.begin(), cells_.end()));
}

Tensor LabelMatrix::annotated_mask() const {
    std::vector<double> m(segments_);
    for (std::size_t t = 0; t < segments_; ++t) m[t] = null_[t] ? 0.0 : 1.0;
    return Tensor::from_vector({segments_}, std::move(m));
}

LabelMatrix LabelMatrix::from_tensor(const Tensor& binary) {
    if (binary.rank() != 2) throw ShapeError("label tensor must be [T, C]");
    LabelMatrix m(binary.dim(0), binary.dim(1));
    const auto v = binary.data();
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (v[i] != 0.0 && v[i] != 1.0) throw ContractError("label tensor must be 0/1 valued");
        m.cells_[i] = v[i] != 0.0 ? 1 : 0;
    }
    return m;
}

Modality parse_modality(const std::string& code) {
    if (code == "a") return Modality::Audio;
    if (code == "v") return Modality::Visual;
    throw ParseError("modality must be 'a' or 'v', got '" + code + "'");
}

LabelTable parse_label_csv(std::istream& in, const Vocabulary& vocab, std::size_t segments, const std::string& source) {
    LabelTable table;
    std::set<std::tuple<std::string, int, std::size_t>> seen;
    read_rows(in, segments, source, [&](CsvRow row) {
        const std::string where = source + ":" + std::to_string(row.line) + ": ";
        if (!seen.emplace(row.video_id, static_cast<int>(row.modality), row.segment).second) {
            throw ParseError(where + "duplicate row for (" + row.video_id + ", " + std::string(modality_code(row.modality)) +
                             ", " + std::to_string(row.segment) + ")");
        }
        const auto classes = parse_classes(row.labels, vocab, where);
        auto [it, inserted] = table.try_emplace(row.video_id, segments, vocab.size());
        LabelMatrix& m = it->second.get(row.modality);
        if (classes.empty()) {
            m.set_null(row.segment, true);
        } else {
            for (std::size_t c : classes) m.set(row.segment, c, true);
        }
    });
    return table;
}

LabelTable read_label_csv(const std::filesystem::path& path, const Vocabulary& vocab, std::size_t segments) {
    auto in = open_for_read(path);
    return parse_label_csv(in, vocab, segments, path.string());
}

void write_label_csv(std::ostream& out, const LabelTable& table, const Vocabulary& vocab) {
    out << kHeader << '\n';
    for (const auto& [id, labels] : table) {
        for (Modality m : {Modality::Audio, Modality::Visual}) {
            const LabelMatrix& mat = labels.get(m);
            if (mat.classes() != vocab.size()) throw ShapeError("label matrix width does not match vocabulary");
            for (std::size_t t = 0; t < mat.segments(); ++t) {
                if (mat.is_null(t)) {
                    out << id << ',' << modality_code(m) << ',' << t << ",\n";
                } else if (!mat.row_empty(t)) {
                    out << id << ',' << modality_code(m) << ',' << t << ',' << join_classes(mat.row_classes(t), vocab) << '\n';
                }
            }
        }
    }
}

void write_label_csv(const std::filesystem::path& path, const LabelTable& table, const Vocabulary& vocab) {
    auto out = open_for_write(path);
    write_label_csv(out, table, vocab);
    if (!out) throw FormatError("short write to '" + path.string() + "'");
}

std::vector<PatchRow> parse_patch_csv(std::istream& in, const Vocabulary& vocab, std::size_t segments,
                                      const std::string& source) {
    std::vector<PatchRow> rows;
    read_rows(in, segments, source, [&](CsvRow row) {
        PatchRow p;
        p.video_id = std::move(row.video_id);
        p.modality = row.modality;
        p.segment = row.segment;
        p.line = row.line;
        if (row.labels == "DISCARD") {
            p.discard = true;
        } else {
            p.classes = parse_classes(row.labels, vocab, source + ":" + std::to_string(row.line) + ": ");
        }
        rows.push_back(std::move(p));
    });
    return rows;
}

std::vector<PatchRow> read_patch_csv(const std::filesystem::path& path, const Vocabulary& vocab, std::size_t segments) {
    auto in = open_for_read(path);
    return parse_patch_csv(in, vocab, segments, path.string());
}

void write_patch_csv(std::ostream& out, const std::vector<PatchRow>& rows, const Vocabulary& vocab) {
    out << kHeader << '\n';
    for (const PatchRow& r : rows) {
        out << r.video_id << ',' << modality_code(r.modality) << ',' << r.segment << ','
            << (r.discard ? std::string("DISCARD") : join_classes(r.classes, vocab)) << '\n';
    }
}

void write_patch_csv(const std::filesystem::path& path, const std::vector<PatchRow>& rows, const Vocabulary& vocab) {
    auto out = open_for_write(path);
    write_patch_csv(out, rows, vocab);
    if (!out) throw FormatError("short write to '" + path.string() + "'");
}

}  // namespace mug::data
