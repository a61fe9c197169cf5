#pragma once

#include "cfkd/dataio/dataset.hpp"

#include <istream>
#include <ostream>
#include <string>

namespace cfkd::dataio {

/// age,bmi,smoking,pack_years,sex,hf,cvd,diabetes,depression,asthma,emphysema,concomitant,eos,bdr,treatment,fidelity,qaly
const std::string& dataset_csv_header();

void write_dataset_csv(std::ostream& out, const FidelityDataset& ds);
void write_dataset_csv(const std::string& path, const FidelityDataset& ds);

/// Throws IoError on malformed input. Every row must share one treatment and fidelity tag.
FidelityDataset read_dataset_csv(std::istream& in);
FidelityDataset read_dataset_csv(const std::string& path);

} // namespace cfkd::dataio
