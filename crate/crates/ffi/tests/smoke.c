#include <math.h>
#include <stdio.h>
#include <string.h>

#include "consensus_lab.h"

#define CHECK(cond)                                                   \
    do {                                                              \
        if (!(cond)) {                                                \
            fprintf(stderr, "%s:%d: check failed: %s\n", __FILE__,    \
                    __LINE__, #cond);                                 \
            return 1;                                                 \
        }                                                             \
    } while (0)

int main(void) {
    ClGraph *g = NULL;
    CHECK(cl_graph_family("complete", 4, 0, &g) == CL_STATUS_OK);
    CHECK(cl_graph_vertex_count(g) == 4);
    CHECK(cl_graph_edge_count(g) == 6);

    double winners[2];
    double t = 0.0;
    CHECK(cl_exact(g, 2, 0.5, CL_INIT_KIND_UNIFORM, 0, winners, 2, &t) == CL_STATUS_OK);
    CHECK(fabs(t - 5.375) < 1e-12);
    CHECK(fabs(winners[0] - 0.5) < 1e-12);

    char *text = NULL;
    CHECK(cl_graph_write(g, &text) == CL_STATUS_OK);
    CHECK(strncmp(text, "4\n0 1\n", 6) == 0);
    ClGraph *h = NULL;
    CHECK(cl_graph_parse(text, &h) == CL_STATUS_OK);
    CHECK(cl_graph_edge_count(h) == 6);
    cl_string_free(text);
    cl_graph_free(h);

    ClSimStats stats;
    uint64_t counts[2];
    CHECK(cl_estimate(g, 2, 0.5, 2000, 7, CL_INIT_KIND_UNIFORM, 0, 1, &stats, counts, 2) == CL_STATUS_OK);
    CHECK(stats.replications == 2000);
    CHECK(counts[0] + counts[1] == 2000);
    CHECK(fabs(stats.time_mean - 5.375) < 5 * stats.time_stderr);
    cl_graph_free(g);

    CHECK(cl_graph_parse("3\n0 1\n", &g) == CL_STATUS_PARSE);
    CHECK(strstr(cl_last_error_message(), "line") != NULL);

    double law[3];
    CHECK(cl_survivor_distribution(5, 3, 0.25, law, 2) == CL_STATUS_BUFFER_TOO_SMALL);
    CHECK(cl_survivor_distribution(5, 3, 0.25, law, 3) == CL_STATUS_OK);
    CHECK(cl_last_error_message() == NULL);
    CHECK(fabs(law[0] + law[1] + law[2] - 1.0) < 1e-12);

    CHECK(cl_complete_graph_time(4, 0.5, CL_COMPLETE_INIT_BINOMIAL, 0, NULL) == CL_STATUS_NULL_POINTER);
    puts("ok");
    return 0;
}
