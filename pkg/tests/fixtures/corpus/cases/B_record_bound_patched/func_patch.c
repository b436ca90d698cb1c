#define SSL3_RT_MAX_PLAIN_LENGTH 16384

int ssl3_read_record(SSL3_RECORD *rr, unsigned char *out)
{
    unsigned int n;
    int al;

    n = rr->length;
    if (n >= SSL3_RT_MAX_PLAIN_LENGTH) {
        al = SSL_AD_RECORD_OVERFLOW;
        ssl3_send_alert(rr->s, 2, al);
        return -1;
    }
    memcpy(out, rr->data, n);
    rr->read = 1;
    return n;
}
