int process_request(struct conn *c, struct req *r)
{
    int ret;

    ret = parse_header(r->buf, r->len);
    if (ret < 0) {
        log_error(c, ret);
        return ret;
    }
    ret = dispatch(c, r);
    release_req(r);
    return ret;
}
