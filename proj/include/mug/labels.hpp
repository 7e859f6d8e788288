#pragma once

// Category vocabularies, per-segment label matrices and the label CSV schema
//   video_id,modality,segment,labels
// shared by pseudo-labels, ground truth, prediction dumps and annotation
// patches. Rows for segments without events are omitted; a row with an empty
// labels field marks a null (unannotated) segment.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "mug/modality.hpp"
#include "mug/tensor.hpp"

namespace mug::data {

class Vocabulary {
public:
    Vocabulary() = default;
    explicit Vocabulary(std::vector<std::string> names);

    // The first C of the 25 LLP event categories.
    static Vocabulary standard(std::size_t classes);

    std::size_t size() const { return names_.size(); }
    const std::string& name(std::size_t index) const { return names_.at(index); }
    const std::vector<std::string>& names() const { return names_; }
    // Throws VocabularyError for unknown names.
    std::size_t index(const std::string& name) const;
    bool contains(const std::string& name) const { return lookup_.contains(name); }

    bool operator==(const Vocabulary& other) const { return names_ == other.names_; }

private:
    std::vector<std::string> names_;
    std::unordered_map<std::string, std::size_t> lookup_;
};

// Binary T x C matrix with a per-segment null flag. Null rows are all zero.
class LabelMatrix {
public:
    LabelMatrix() = default;
    LabelMatrix(std::size_t segments, std::size_t classes);

    std::size_t segments() const { return segments_; }
    std::size_t classes() const { return classes_; }

    bool get(std::size_t t, std::size_t c) const { return cells_[t * classes_ + c] != 0; }
    // Setting a cell on a null row clears the flag.
    void set(std::size_t t, std::size_t c, bool value);
    bool is_null(std::size_t t) const { return null_[t] != 0; }
    // Marks the row null and zeroes it, or clears the flag.
    void set_null(std::size_t t, bool value);

    std::size_t null_count() const;
    bool has_null() const { return null_count() > 0; }
    bool row_empty(std::size_t t) const;
    std::vector<std::size_t> row_classes(std::size_t t) const;
    // Per class: 1 if the class is on in any segment.
    std::vector<std::uint8_t> column_any() const;
    std::size_t positives() const;

    Tensor to_tensor() const;  // [T, C] of 0/1
    Tensor annotated_mask() const;  // [T], 0 on null rows
    static LabelMatrix from_tensor(const Tensor& binary);

    bool operator==(const LabelMatrix& other) const = default;

private:
    std::size_t segments_ = 0;
    std::size_t classes_ = 0;
    std::vector<std::uint8_t> cells_;
    std::vector<std::uint8_t> null_;
};

struct VideoLabels {
    LabelMatrix audio;
    LabelMatrix visual;

    VideoLabels() = default;
    VideoLabels(std::size_t segments, std::size_t classes) : audio(segments, classes), visual(segments, classes) {}
    LabelMatrix& get(Modality m) { return m == Modality::Audio ? audio : visual; }
    const LabelMatrix& get(Modality m) const { return m == Modality::Audio ? audio : visual; }
    bool operator==(const VideoLabels& other) const = default;
};

// Ordered by video id so serialization is deterministic.
using LabelTable = std::map<std::string, VideoLabels>;

Modality parse_modality(const std::string& code);

LabelTable parse_label_csv(std::istream& in, const Vocabulary& vocab, std::size_t segments,
                           const std::string& source = "<labels>");
LabelTable read_label_csv(const std::filesystem::path& path, const Vocabulary& vocab, std::size_t segments);
void write_label_csv(std::ostream& out, const LabelTable& table, const Vocabulary& vocab);
void write_label_csv(const std::filesystem::path& path, const LabelTable& table, const Vocabulary& vocab);

struct PatchRow {
    std::string video_id;
    Modality modality = Modality::Audio;
    std::size_t segment = 0;
    std::vector<std::size_t> classes;
    bool discard = false;
    std::size_t line = 0;
};

// Same columns as the label CSV; the labels field may be DISCARD, which
// applies to the whole video (modality and segment are still validated).
std::vector<PatchRow> parse_patch_csv(std::istream& in, const Vocabulary& vocab, std::size_t segments,
                                      const std::string& source = "<patch>");
std::vector<PatchRow> read_patch_csv(const std::filesystem::path& path, const Vocabulary& vocab, std::size_t segments);
void write_patch_csv(std::ostream& out, const std::vector<PatchRow>& rows, const Vocabulary& vocab);
void write_patch_csv(const std::filesystem::path& path, const std::vector<PatchRow>& rows, const Vocabulary& vocab);

}  // namespace mug::data
