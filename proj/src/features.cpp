#include "crowdsight/features.hpp"

#include <algorithm>
#include <cmath>

#include "crowdsight/csv.hpp"
#include "crowdsight/evaluation.hpp"

namespace crowdsight {

FeatureVector region_features(const FlowPolar& polar, const Region& region) {
    if (region.area() < 1) throw DataError("region_features: empty region");
    const std::size_t n = polar.magnitude.size();
    const double p = static_cast<double>(region.area());

    double sum_m = 0, sum_r = 0;
    for (int k : region.pixel_indices) {
        if (k < 0 || static_cast<std::size_t>(k) >= n)
            throw DataError("region_features: pixel outside raster bounds");
        sum_m += polar.magnitude[k];
        sum_r += polar.orientation[k];
    }
    FeatureVector f;
    f.p = region.area();
    f.mu_m = sum_m / p;
    f.mu_r = sum_r / p;

    double sq_m = 0, sq_r = 0;
    for (int k : region.pixel_indices) {
        const double dm = polar.magnitude[k] - f.mu_m;
        const double dr = polar.orientation[k] - f.mu_r;
        sq_m += dm * dm;
        sq_r += dr * dr;
    }
    f.var_m = sq_m / p;
    f.var_r = sq_r / p;
    f.sd_m = std::sqrt(f.var_m);
    f.sd_r = std::sqrt(f.var_r);
    return f;
}

int FeatureTable::class_index(const std::string& name) const {
    const auto it = std::find(class_names.begin(), class_names.end(), name);
    return it == class_names.end() ? -1 : static_cast<int>(it - class_names.begin());
}

namespace {

// Registers `name` in the sorted unique class list, returning its index.
int intern_class(std::vector<std::string>& names, const std::string& name) {
    const auto it = std::lower_bound(names.begin(), names.end(), name);
    if (it != names.end() && *it == name) return static_cast<int>(it - names.begin());
    names.insert(it, name);
    return -2;  // caller must re-map after all inserts
}

}  // namespace

FeatureTable batch_features(const std::vector<FlowPolar>& polars,
                            const std::vector<std::vector<Region>>& regions,
                            LabelSource source,
                            const std::vector<std::vector<TruthBox>>* truth,
                            const std::vector<int>* frame_labels, double iou_threshold) {
    if (regions.size() != polars.size())
        throw DataError("batch_features: regions and polar rasters must align per frame");
    if (source == LabelSource::kBoxes && truth == nullptr)
        throw DataError("batch_features: box labeling requires ground truth");
    if (source == LabelSource::kFrameLabels && frame_labels == nullptr)
        throw DataError("batch_features: frame labeling requires frame labels");

    FeatureTable table;
    // Two passes: collect the string labels first so class ids index a
    // sorted name list regardless of row order.
    std::vector<std::string> row_labels;
    for (std::size_t t = 0; t < regions.size(); ++t) {
        for (const Region& region : regions[t]) {
            FeatureRow row;
            row.frame = static_cast<int>(t);
            row.region_id = region.id;
            row.features = region_features(polars[t], region);
            std::string label;
            if (source == LabelSource::kBoxes) {
                const auto& boxes = (*truth)[t];
                double best_iou = 0;
                int best = -1;
                for (std::size_t g = 0; g < boxes.size(); ++g) {
                    const double ov = iou(region.bbox(), boxes[g].box);
                    if (ov > best_iou) {
                        best_iou = ov;
                        best = static_cast<int>(g);
                    }
                }
                if (best >= 0 && best_iou >= iou_threshold) label = boxes[best].behavior;
            } else if (source == LabelSource::kFrameLabels) {
                label = (*frame_labels)[t] ? "abnormal" : "normal";
            }
            if (!label.empty()) intern_class(table.class_names, label);
            row_labels.push_back(label);
            table.rows.push_back(row);
        }
    }
    for (std::size_t i = 0; i < table.rows.size(); ++i)
        table.rows[i].label =
            row_labels[i].empty() ? -1 : table.class_index(row_labels[i]);
    return table;
}

void write_feature_csv(const FeatureTable& table, const std::filesystem::path& file) {
    std::ofstream out(file);
    if (!out) throw DataError("cannot write " + file.string());
    out << "frame,region_id,mu_m,mu_r,var_m,var_r,sd_m,sd_r,p,label\n";
    for (const FeatureRow& r : table.rows) {
        const FeatureVector& f = r.features;
        out << r.frame << ',' << r.region_id << ',' << format_double(f.mu_m) << ','
            << format_double(f.mu_r) << ',' << format_double(f.var_m) << ','
            << format_double(f.var_r) << ',' << format_double(f.sd_m) << ','
            << format_double(f.sd_r) << ',' << f.p << ','
            << (r.label < 0 ? std::string("-") : table.class_names[r.label]) << '\n';
    }
    if (!out) throw DataError("cannot write " + file.string());
}

FeatureTable read_feature_csv(const std::filesystem::path& file) {
    const std::vector<std::string> lines = read_lines(file);
    FeatureTable table;
    std::vector<std::string> row_labels;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (lines[i].empty()) continue;
        const auto fields = split_csv_line(lines[i]);
        if (i == 0 && !fields.empty() && fields[0] == "frame") continue;  // header
        const std::string ctx = file.string() + ":" + format_int(static_cast<long long>(i + 1));
        if (fields.size() != 10) throw DataError(ctx + ": expected 10 fields");
        FeatureRow row;
        row.frame = static_cast<int>(parse_integer(fields[0], ctx));
        row.region_id = static_cast<int>(parse_integer(fields[1], ctx));
        row.features.mu_m = parse_number(fields[2], ctx);
        row.features.mu_r = parse_number(fields[3], ctx);
        row.features.var_m = parse_number(fields[4], ctx);
        row.features.var_r = parse_number(fields[5], ctx);
        row.features.sd_m = parse_number(fields[6], ctx);
        row.features.sd_r = parse_number(fields[7], ctx);
        row.features.p = parse_integer(fields[8], ctx);
        if (fields[9] != "-") intern_class(table.class_names, fields[9]);
        row_labels.push_back(fields[9]);
        table.rows.push_back(row);
    }
    for (std::size_t i = 0; i < table.rows.size(); ++i)
        table.rows[i].label =
            row_labels[i] == "-" ? -1 : table.class_index(row_labels[i]);
    return table;
}

}  // namespace crowdsight
