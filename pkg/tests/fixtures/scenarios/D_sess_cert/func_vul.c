#include "include/ssl3.h"

int ssl3_send_client_key_exchange(SSL *s)
{
    unsigned long alg_k;
    int n = 0;
    int al;

    alg_k = s->s3->tmp.new_cipher->algorithm_mkey;
    if (alg_k & SSL_MKEY_RSA) {
        if (s->session->sess_cert == NULL) {
            al = SSL_AD_UNEXPECTED_MESSAGE;
            goto f_err;
        }
        n = ssl_rsa_encrypt(s, s->session->sess_cert);
    } else if (alg_k & SSL_MKEY_DHE) {
        n = ssl_dh_compute(s, s->session->sess_cert);
    }
    return n;
f_err:
    ssl3_send_alert(s, SSL3_AL_FATAL, al);
    return -1;
}
