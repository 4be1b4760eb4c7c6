#include "crowdsight/dataset_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "crowdsight/csv.hpp"

namespace crowdsight {

bool is_known_class(std::string_view label) {
    return std::find(kClassVocabulary.begin(), kClassVocabulary.end(), label) !=
           kClassVocabulary.end();
}

std::vector<AnnotationRow> parse_annotations(const std::filesystem::path& file,
                                             bool allow_empty_label) {
    const std::vector<std::string> lines = read_lines(file);
    std::vector<AnnotationRow> rows;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        const auto fields = split_csv_line(lines[i]);
        if (i == 0 && !fields.empty() && fields[0] == "video_id") continue;  // header
        const std::string ctx = file.string() + ":" + format_int(static_cast<long long>(i + 1));
        if (fields.size() != 7)
            throw DataError(ctx + ": expected 7 fields (video_id,frame,x,y,w,h,class_label)");
        AnnotationRow row;
        row.video_id = fields[0];
        row.frame = static_cast<int>(parse_integer(fields[1], ctx));
        if (row.frame < 0) throw DataError(ctx + ": negative frame index");
        row.x = parse_number(fields[2], ctx);
        row.y = parse_number(fields[3], ctx);
        row.w = parse_number(fields[4], ctx);
        row.h = parse_number(fields[5], ctx);
        if (!(row.w > 0) || !(row.h > 0))
            throw DataError(ctx + ": nonpositive box extent");
        row.class_label = fields[6];
        if (row.class_label.empty()) {
            if (!allow_empty_label) throw DataError(ctx + ": missing class label");
        } else if (!is_known_class(row.class_label)) {
            throw DataError(ctx + ": unknown class label '" + row.class_label + "'");
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

void write_annotations(const std::vector<AnnotationRow>& rows,
                       const std::filesystem::path& file) {
    std::ofstream out(file);
    if (!out) throw DataError("cannot write " + file.string());
    out << "video_id,frame,x,y,w,h,class_label\n";
    for (const AnnotationRow& r : rows)
        out << r.video_id << ',' << r.frame << ',' << format_double(r.x) << ','
            << format_double(r.y) << ',' << format_double(r.w) << ','
            << format_double(r.h) << ',' << r.class_label << '\n';
    if (!out) throw DataError("cannot write " + file.string());
}

std::vector<int> read_frame_labels(const std::filesystem::path& file, int frame_count) {
    const std::vector<std::string> lines = read_lines(file);
    std::vector<std::pair<int, int>> entries;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        const auto fields = split_csv_line(lines[i]);
        if (i == 0 && !fields.empty() && fields[0] == "frame") continue;
        const std::string ctx = file.string() + ":" + format_int(static_cast<long long>(i + 1));
        if (fields.size() != 2) throw DataError(ctx + ": expected 2 fields (frame,label)");
        const int frame = static_cast<int>(parse_integer(fields[0], ctx));
        const int label = static_cast<int>(parse_integer(fields[1], ctx));
        if (frame < 0) throw DataError(ctx + ": negative frame index");
        if (label != 0 && label != 1) throw DataError(ctx + ": label must be 0 or 1");
        entries.emplace_back(frame, label);
    }
    int max_frame = frame_count - 1;
    for (const auto& [frame, label] : entries) max_frame = std::max(max_frame, frame);
    std::vector<int> labels(max_frame + 1, 0);
    std::vector<char> seen(max_frame + 1, 0);
    for (const auto& [frame, label] : entries) {
        if (seen[frame])
            throw DataError(file.string() + ": duplicate frame " + format_int(frame));
        seen[frame] = 1;
        labels[frame] = label;
    }
    if (frame_count >= 0 && static_cast<int>(labels.size()) > frame_count)
        throw DataError(file.string() + ": frame index beyond sequence length");
    return labels;
}

void write_frame_labels(const std::vector<int>& labels,
                        const std::filesystem::path& file) {
    std::ofstream out(file);
    if (!out) throw DataError("cannot write " + file.string());
    out << "frame,label\n";
    for (std::size_t i = 0; i < labels.size(); ++i)
        out << i << ',' << (labels[i] ? 1 : 0) << '\n';
    if (!out) throw DataError("cannot write " + file.string());
}

Split make_split(int n_frames, const SplitSpec& spec) {
    if (n_frames < 2) throw DataError("make_split: need at least 2 frames");
    Split split;
    if (spec.mode == SplitSpec::Mode::kFraction) {
        if (!(spec.fraction > 0) || !(spec.fraction < 1))
            throw DataError("make_split: fraction must lie in (0,1)");
        const int n_train =
            static_cast<int>(std::ceil(spec.fraction * static_cast<double>(n_frames)));
        if (n_train >= n_frames) throw DataError("make_split: empty test partition");
        if (n_train < 1) throw DataError("make_split: empty train partition");
        for (int i = 0; i < n_train; ++i) split.train.push_back(i);
        for (int i = n_train; i < n_frames; ++i) split.test.push_back(i);
        return split;
    }
    std::vector<char> assigned(n_frames, 0);
    auto take = [&](const std::vector<int>& frames, std::vector<int>& dst) {
        for (int f : frames) {
            if (f < 0 || f >= n_frames)
                throw DataError("make_split: frame index " + format_int(f) + " out of range");
            if (assigned[f])
                throw DataError("make_split: frame " + format_int(f) + " listed twice");
            assigned[f] = 1;
            dst.push_back(f);
        }
    };
    take(spec.train_frames, split.train);
    take(spec.test_frames, split.test);
    for (int f = 0; f < n_frames; ++f)
        if (!assigned[f])
            throw DataError("make_split: frame " + format_int(f) + " unassigned");
    if (split.test.empty()) throw DataError("make_split: empty test partition");
    if (split.train.empty()) throw DataError("make_split: empty train partition");
    std::sort(split.train.begin(), split.train.end());
    std::sort(split.test.begin(), split.test.end());
    return split;
}

}  // namespace crowdsight
