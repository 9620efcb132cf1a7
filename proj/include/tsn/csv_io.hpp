#pragma once

#include <map>
#include <string>
#include <vector>

#include "tsn/dataset.hpp"
#include "tsn/prepare.hpp"

namespace tsn {

/**
 * Loads a dataset from CSV.  Two layouts are accepted and told apart by the
 * header: long form has exactly the columns (time, user, value); anything
 * else is wide form, first column a timestamp or integer index and one
 * column per user.  Empty or non-numeric cells are missing readings; they
 * are stored as 0 with the mask cleared.
 */
TimeSeriesDataset load_dataset_csv(const std::string& path);

// Writes the wide layout with a leading integer index column.
void write_dataset_csv(const TimeSeriesDataset& data, const std::string& path);

// user,cluster rows.
std::map<std::string, std::string> load_labels_csv(const std::string& path);
void write_labels_csv(const std::map<std::string, std::string>& labels,
                      const std::string& path);

// user,start,end,reason rows covering every removed window-start range.
void write_removal_report(const std::vector<RemovalRow>& report, const std::string& path);

}  // namespace tsn
