#include "cfkd/dataio/csv.hpp"

#include "cfkd/errors.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace cfkd::dataio {

namespace {

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) {
        if (!cell.empty() && cell.back() == '\r') {
            cell.pop_back();
        }
        cells.push_back(cell);
    }
    return cells;
}

double parse_double(const std::string& s, std::size_t line_no) {
    double v = 0.0;
    const auto* end = s.data() + s.size();
    const auto [ptr, ec] = std::from_chars(s.data(), end, v);
    if (ec != std::errc() || ptr != end) {
        throw IoError("dataset csv line " + std::to_string(line_no) + ": bad number '" + s + "'");
    }
    return v;
}

void write_number(std::ostream& out, double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    out.write(buf, ptr - buf);
}

} // namespace

const std::string& dataset_csv_header() {
    static const std::string header =
        "age,bmi,smoking,pack_years,sex,hf,cvd,diabetes,depression,asthma,emphysema,concomitant,eos,bdr,"
        "treatment,fidelity,qaly";
    return header;
}

void write_dataset_csv(std::ostream& out, const FidelityDataset& ds) {
    validate(ds);
    out << dataset_csv_header() << '\n';
    const std::string fid = to_string(ds.fidelity);
    const int treat = treatment_number(ds.treatment);
    for (std::size_t r = 0; r < ds.size(); ++r) {
        for (std::size_t c = 0; c < kFeatureCount; ++c) {
            write_number(out, ds.features(r, c));
            out << ',';
        }
        out << treat << ',' << fid << ',';
        write_number(out, ds.labels[r]);
        out << '\n';
    }
}

void write_dataset_csv(const std::string& path, const FidelityDataset& ds) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot open '" + path + "' for writing");
    }
    write_dataset_csv(out, ds);
    if (!out) {
        throw IoError("failed writing '" + path + "'");
    }
}

FidelityDataset read_dataset_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) {
        throw IoError("dataset csv: missing header");
    }
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    if (line != dataset_csv_header()) {
        throw IoError("dataset csv: unexpected header '" + line + "'");
    }
    FidelityDataset ds;
    std::vector<double> values;
    std::size_t line_no = 1;
    bool first = true;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") {
            continue;
        }
        const auto cells = split(line);
        if (cells.size() != kFeatureCount + 3) {
            throw IoError("dataset csv line " + std::to_string(line_no) + ": expected " +
                          std::to_string(kFeatureCount + 3) + " cells");
        }
        for (std::size_t c = 0; c < kFeatureCount; ++c) {
            values.push_back(parse_double(cells[c], line_no));
        }
        TreatmentKind treatment;
        Fidelity fidelity;
        try {
            treatment = treatment_from_number(static_cast<int>(parse_double(cells[kFeatureCount], line_no)));
            fidelity = fidelity_from_string(cells[kFeatureCount + 1]);
        } catch (const ContractError& e) {
            throw IoError("dataset csv line " + std::to_string(line_no) + ": " + e.what());
        }
        if (first) {
            ds.treatment = treatment;
            ds.fidelity = fidelity;
            first = false;
        } else if (treatment != ds.treatment || fidelity != ds.fidelity) {
            throw IoError("dataset csv line " + std::to_string(line_no) + ": mixed treatment/fidelity tags");
        }
        ds.labels.push_back(parse_double(cells[kFeatureCount + 2], line_no));
    }
    ds.features = numcore::Tensor2D(ds.labels.size(), kFeatureCount, std::move(values));
    return ds;
}

FidelityDataset read_dataset_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open '" + path + "' for reading");
    }
    return read_dataset_csv(in);
}

} // namespace cfkd::dataio
