__int64 __fastcall ssl3_send_client_key_exchange(__int64 a1)
{
  __int64 v1; // rax
  unsigned int v2; // ebx

  v1 = *(_QWORD *)(*(_QWORD *)(*(_QWORD *)(a1 + 128) + 848LL) + 28LL);
  v2 = 0;
  if ( (v1 & 1) != 0 )
  {
    if ( !*(_QWORD *)(*(_QWORD *)(a1 + 304) + 152LL) )
      goto LABEL_8;
    v2 = ssl_rsa_encrypt(a1, *(_QWORD *)(*(_QWORD *)(a1 + 304) + 152LL));
  }
  else if ( (v1 & 8) != 0 )
  {
    v2 = ssl_dh_compute(a1, *(_QWORD *)(*(_QWORD *)(a1 + 304) + 152LL));
  }
  return v2;
LABEL_8:
  ssl3_send_alert(a1, 2LL, 10LL);
  return 0xFFFFFFFFLL;
}
