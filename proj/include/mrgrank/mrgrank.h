#ifndef MRGRANK_MRGRANK_H
#define MRGRANK_MRGRANK_H

#include <stddef.h>
#include <stdint.h>

#if defined(MRGRANK_BUILDING_LIBRARY)
#define MRG_API __attribute__((visibility("default")))
#else
#define MRG_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef struct mrg_session mrg_session;
typedef struct mrg_server mrg_server;

typedef enum mrg_status {
  MRG_OK = 0,
  MRG_INVALID_ARGUMENT = 1,
  MRG_NOT_FOUND = 2,
  MRG_OUT_OF_RANGE = 3,
  MRG_INVALID_STATE = 4,
  MRG_PARSE = 5,
  MRG_IO = 6,
  MRG_NUMERIC = 7,
  MRG_INTERNAL = 8
} mrg_status;

MRG_API const char* mrg_version(void);

/* Message of the last failed call on this thread; empty after a success. */
MRG_API const char* mrg_last_error(void);

/* Frees strings returned through char** out-parameters. */
MRG_API void mrg_string_free(char* s);

/* config_path may be NULL for defaults. */
MRG_API mrg_status mrg_session_build(const char* config_path, const char* posts_path,
                                     const char* users_path, mrg_session** out);
MRG_API mrg_status mrg_session_load(const char* path, mrg_session** out);
MRG_API mrg_status mrg_session_save(mrg_session* session, const char* path);
MRG_API void mrg_session_free(mrg_session* session);

MRG_API mrg_status mrg_session_set_seed(mrg_session* session, uint64_t seed);
MRG_API mrg_status mrg_session_set_walks(mrg_session* session, size_t walks_per_node);
MRG_API mrg_status mrg_session_set_edit_log(mrg_session* session, const char* path);

/* method: "exact" or "mc". */
MRG_API mrg_status mrg_session_solve(mrg_session* session, const char* method);

/* Runs one API request in-process, e.g. ("GET", "/api/rankings?kind=user").
   body may be NULL. *response receives the JSON body; free it with
   mrg_string_free. Returns MRG_OK whenever a response was produced, whatever
   its HTTP status. */
MRG_API mrg_status mrg_session_request(mrg_session* session, const char* method,
                                       const char* target, const char* body, int* http_status,
                                       char** response);

MRG_API mrg_status mrg_session_summary(mrg_session* session, char** json);

/* sources: comma-separated cluster ids. */
MRG_API mrg_status mrg_session_export_svg(mrg_session* session, const char* sources,
                                          const char* svg_path);

MRG_API mrg_status mrg_session_write_walks(mrg_session* session, const char* path);

/* Serves the session in the background. port 0 picks a free port, reported
   through bound_port. The session must outlive the server. */
MRG_API mrg_status mrg_server_start(mrg_session* session, const char* host, int port,
                                    mrg_server** out, int* bound_port);
MRG_API void mrg_server_stop(mrg_server* server);

/* Serves on the calling thread until the process ends. */
MRG_API mrg_status mrg_server_run(mrg_session* session, const char* host, int port);

/* Writes posts.jsonl, users.jsonl and planted.json into dir. */
MRG_API mrg_status mrg_generate_synthetic(const char* dir, uint64_t seed);

#ifdef __cplusplus
}
#endif

#endif
