#pragma once

#include <string>
#include <vector>

#include "tscd/eval.hpp"
#include "tscd/matrix.hpp"
#include "tscd/timeseries.hpp"

namespace tscd {

/// Shortest round-trip decimal rendering of a double (locale independent).
std::string format_double(double v);

/// Header var_0,...,var_{d-1}; one row per time step; missing cells empty.
void write_timeseries_csv(const TimeSeriesMatrix& x, const std::string& path);
TimeSeriesMatrix read_timeseries_csv(const std::string& path);

/// {"d": int, "tau_max": int|null, "summary": [[0|1]], "window": [[[0|1]]]|null}
void write_graph_json(const CausalGraph& g, const std::string& path);
CausalGraph read_graph_json(const std::string& path);

/// d rows x d columns, row = source, column = target. No header.
void write_score_csv(const Matrix& scores, const std::string& path);
Matrix read_score_csv(const std::string& path);

/// scenario,param,d,t,f,seed,method,config_id,config_json,auroc,auprc
/// Metrics are written x100 with 4 decimals; sentinel rows leave them empty.
void write_results_csv(const std::vector<EvalRecord>& records, const std::string& path);
std::vector<EvalRecord> read_results_csv(const std::string& path);

/// scenario,d,t,f,method,mode,mean_auroc,std_auroc,mean_auprc,std_auprc,n
void write_aggregate_csv(const std::vector<AggregateRow>& rows, const std::string& path);
std::vector<AggregateRow> read_aggregate_csv(const std::string& path);

}  // namespace tscd
